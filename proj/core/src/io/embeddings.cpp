#include "ntfa/io/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "ntfa/diff/ops.hpp"
#include "ntfa/error.hpp"

namespace ntfa::io {

std::vector<EmbeddingRow> export_embeddings(const inference::VariationalState& q,
                                            const StudyDataset& dataset) {
  std::vector<EmbeddingRow> rows;
  auto emit = [&](EmbeddingKind kind, const std::vector<inference::NormalParams>& params,
                  const std::vector<std::string>& labels, const char* prefix) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      EmbeddingRow row;
      row.kind = kind;
      row.index = i;
      row.label = i < labels.size() ? labels[i] : prefix + std::to_string(i);
      for (std::size_t d = 0; d < params[i].mean.size(); ++d) {
        row.mean.push_back(params[i].mean[d]);
        row.sd.push_back(std::exp(diff::clamp_log_scale(params[i].log_scale[d])));
      }
      rows.push_back(std::move(row));
    }
  };
  emit(EmbeddingKind::participant, q.participant_embeddings, dataset.participant_labels, "p");
  emit(EmbeddingKind::stimulus, q.stimulus_embeddings, dataset.stimulus_labels, "s");
  return rows;
}

std::string embeddings_csv(const std::vector<EmbeddingRow>& rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().mean.size();
  std::ostringstream out;
  out.precision(17);
  out << "kind,index,label";
  for (std::size_t i = 0; i < d; ++i) out << ",mean_" << i;
  for (std::size_t i = 0; i < d; ++i) out << ",sd_" << i;
  out << '\n';
  for (const EmbeddingRow& r : rows) {
    if (r.mean.size() != d || r.sd.size() != d) throw DimensionError("embeddings: ragged rows");
    if (r.label.find_first_of(",\n") != std::string::npos) {
      throw ContractError("embeddings: label '" + r.label + "' contains a separator");
    }
    out << (r.kind == EmbeddingKind::participant ? "participant" : "stimulus") << ','
        << r.index << ',' << r.label;
    for (double x : r.mean) out << ',' << x;
    for (double x : r.sd) out << ',' << x;
    out << '\n';
  }
  return out.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return x;
  } catch (const std::exception&) {
    throw FormatError("embeddings csv line " + std::to_string(line) + ": bad number '" + text + "'");
  }
}

}  // namespace

std::vector<EmbeddingRow> parse_embeddings_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embeddings csv: empty input");
  const std::vector<std::string> header = split(line);
  if (header.size() < 3 || (header.size() - 3) % 2 != 0 || header[0] != "kind") {
    throw FormatError("embeddings csv: unexpected header");
  }
  const std::size_t d = (header.size() - 3) / 2;
  std::vector<EmbeddingRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw FormatError("embeddings csv line " + std::to_string(line_no) + ": wrong cell count");
    }
    EmbeddingRow row;
    if (cells[0] == "participant") row.kind = EmbeddingKind::participant;
    else if (cells[0] == "stimulus") row.kind = EmbeddingKind::stimulus;
    else throw FormatError("embeddings csv line " + std::to_string(line_no) + ": bad kind");
    row.index = static_cast<std::size_t>(to_double(cells[1], line_no));
    row.label = cells[2];
    for (std::size_t i = 0; i < d; ++i) row.mean.push_back(to_double(cells[3 + i], line_no));
    for (std::size_t i = 0; i < d; ++i) row.sd.push_back(to_double(cells[3 + d + i], line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string embeddings_svg(const std::vector<EmbeddingRow>& rows) {
  static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                  "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  constexpr double panel = 360.0;
  constexpr double margin = 30.0;
  std::ostringstream out;
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * panel + 3 * margin
      << "\" height=\"" << panel + 2 * margin + 20 << "\">\n";
  const EmbeddingKind kinds[] = {EmbeddingKind::participant, EmbeddingKind::stimulus};
  for (std::size_t p = 0; p < 2; ++p) {
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
    double lo_y = lo_x, hi_y = -lo_x;
    std::map<std::string, std::size_t> colors;
    for (const EmbeddingRow& r : rows) {
      if (r.kind != kinds[p] || r.mean.empty()) continue;
      const double x = r.mean[0];
      const double y = r.mean.size() > 1 ? r.mean[1] : 0.0;
      const double sx = r.sd[0];
      const double sy = r.sd.size() > 1 ? r.sd[1] : 0.0;
      lo_x = std::min(lo_x, x - sx);
      hi_x = std::max(hi_x, x + sx);
      lo_y = std::min(lo_y, y - sy);
      hi_y = std::max(hi_y, y + sy);
      colors.emplace(r.label, colors.size());
    }
    const double x0 = margin + p * (panel + margin);
    out << "<g>\n<rect x=\"" << x0 << "\" y=\"" << margin << "\" width=\"" << panel
        << "\" height=\"" << panel << "\" fill=\"none\" stroke=\"#999\"/>\n";
    out << "<text x=\"" << x0 << "\" y=\"" << margin - 8 << "\" font-size=\"14\">"
        << (p == 0 ? "participants" : "stimuli") << "</text>\n";
    if (colors.empty()) {
      out << "</g>\n";
      continue;
    }
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
    const double scale = (panel - 20.0) / span;
    auto px = [&](double x) { return x0 + 10.0 + (x - lo_x) * scale; };
    auto py = [&](double y) { return margin + panel - 10.0 - (y - lo_y) * scale; };
    for (const EmbeddingRow& r : rows) {
      if (r.kind != kinds[p] || r.mean.empty()) continue;
      const char* color = palette[colors.at(r.label) % 8];
      const double x = r.mean[0];
      const double y = r.mean.size() > 1 ? r.mean[1] : 0.0;
      const double sy = r.sd.size() > 1 ? r.sd[1] : 0.0;
      out << "<ellipse cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" rx=\"" << r.sd[0] * scale
          << "\" ry=\"" << sy * scale << "\" fill=\"" << color
          << "\" fill-opacity=\"0.15\" stroke=\"" << color << "\"/>\n";
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color
          << "\"><title>" << r.label << ' ' << r.index << "</title></circle>\n";
    }
    std::size_t legend = 0;
    for (const auto& [label, c] : colors) {
      out << "<text x=\"" << x0 + 5 << "\" y=\"" << margin + panel + 16
          << "\" dx=\"" << 80 * legend << "\" font-size=\"11\" fill=\"" << palette[c % 8] << "\">"
          << label << "</text>\n";
      ++legend;
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ntfa::io
