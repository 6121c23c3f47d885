#include "ntfa/io/dataset_io.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "ntfa/error.hpp"
#include "ntfa/io/matrix_file.hpp"

namespace ntfa::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {
constexpr const char* kFormat = "ntfa-dataset";
constexpr int kVersion = 1;
}  // namespace

void save_dataset(const fs::path& dir, const StudyDataset& dataset) {
  dataset.validate();
  fs::create_directories(dir / "trials");
  json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["num_participants"] = dataset.num_participants;
  manifest["num_stimuli"] = dataset.num_stimuli;
  manifest["grid"] = "grid.ntfa";
  manifest["participant_labels"] = dataset.participant_labels;
  manifest["stimulus_labels"] = dataset.stimulus_labels;
  write_matrix(dir / "grid.ntfa", dataset.grid.coords);
  json trials = json::array();
  for (std::size_t n = 0; n < dataset.trials.size(); ++n) {
    const Trial& t = dataset.trials[n];
    char name[32];
    std::snprintf(name, sizeof name, "trials/%05zu.ntfa", n);
    write_matrix(dir / name, t.data);
    trials.push_back({{"participant", t.participant},
                      {"stimulus", t.stimulus},
                      {"run", t.run},
                      {"block", to_string(t.block)},
                      {"time_points", t.time_points()},
                      {"data", name}});
  }
  manifest["trials"] = std::move(trials);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

StudyDataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("missing dataset manifest " + manifest_path.string());
  StudyDataset ds;
  try {
    const json m = json::parse(read_text(manifest_path));
    if (m.at("format").get<std::string>() != kFormat) {
      throw FormatError(manifest_path.string() + ": not a dataset manifest");
    }
    if (m.at("version").get<int>() != kVersion) {
      throw FormatError(manifest_path.string() + ": unsupported manifest version");
    }
    ds.num_participants = m.at("num_participants").get<std::size_t>();
    ds.num_stimuli = m.at("num_stimuli").get<std::size_t>();
    ds.participant_labels = m.value("participant_labels", std::vector<std::string>{});
    ds.stimulus_labels = m.value("stimulus_labels", std::vector<std::string>{});
    ds.grid.coords = read_matrix(dir / m.at("grid").get<std::string>());
    for (const json& t : m.at("trials")) {
      Trial trial;
      trial.participant = t.at("participant").get<std::size_t>();
      trial.stimulus = t.at("stimulus").get<std::size_t>();
      trial.run = t.at("run").get<std::size_t>();
      trial.block = block_from_string(t.at("block").get<std::string>());
      const fs::path file = dir / t.at("data").get<std::string>();
      trial.data = read_matrix(file);
      if (trial.data.rows() != t.at("time_points").get<std::size_t>()) {
        throw FormatError(file.string() + ": row count disagrees with the manifest");
      }
      ds.trials.push_back(std::move(trial));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  try {
    ds.validate();
  } catch (const ContractError& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace ntfa::io
