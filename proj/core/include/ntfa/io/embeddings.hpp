#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/inference/variational.hpp"

namespace ntfa::io {

enum class EmbeddingKind { participant, stimulus };

struct EmbeddingRow {
  EmbeddingKind kind = EmbeddingKind::participant;
  std::size_t index = 0;
  std::string label;
  std::vector<double> mean;
  std::vector<double> sd;
};

/// One row per participant, then one per stimulus; sd = exp(log-scale).
/// Labels come from the dataset when present.
std::vector<EmbeddingRow> export_embeddings(const inference::VariationalState& q,
                                            const StudyDataset& dataset);

/// Header "kind,index,label,mean_0..,sd_0..", values printed with 17
/// significant digits.  Labels must not contain commas or newlines.
std::string embeddings_csv(const std::vector<EmbeddingRow>& rows);
std::vector<EmbeddingRow> parse_embeddings_csv(const std::string& text);

/// Two scatter panels (participants, stimuli) over the first two
/// dimensions, with a marker at each mean and a 1-sd ellipse, colored by label.
std::string embeddings_svg(const std::vector<EmbeddingRow>& rows);

}  // namespace ntfa::io
