#include "ntfa/io/records.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "ntfa/error.hpp"
#include "ntfa/io/matrix_file.hpp"

namespace ntfa::io {

using nlohmann::json;
namespace fs = std::filesystem;

// --- key-value configuration ------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !in.eof()) throw FormatError("config: bad value '" + text + "' for " + key);
  return value;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw FormatError("config line " + std::to_string(line_no) + ": repeated key " + key);
    }
  }
  return out;
}

void apply_settings(const std::map<std::string, std::string>& values, RunSettings& s) {
  for (const auto& [key, text] : values) {
    if (key == "lr_lambda") s.train.lr_lambda = parse_value<double>(key, text);
    else if (key == "lr_theta") s.train.lr_theta = parse_value<double>(key, text);
    else if (key == "epochs") s.train.epochs = parse_value<std::size_t>(key, text);
    else if (key == "patience") s.train.patience = parse_value<std::size_t>(key, text);
    else if (key == "decay") s.train.decay = parse_value<double>(key, text);
    else if (key == "particles") s.train.particles = parse_value<std::size_t>(key, text);
    else if (key == "batch_size") s.train.batch_size = parse_value<std::size_t>(key, text);
    else if (key == "seed") s.train.seed = parse_value<std::uint64_t>(key, text);
    else if (key == "factors") s.generative.factors = parse_value<std::size_t>(key, text);
    else if (key == "embedding_dim") s.generative.embedding_dim = parse_value<std::size_t>(key, text);
    else if (key == "eval_particles") s.eval_particles = parse_value<std::size_t>(key, text);
    else if (key == "cv_scheme") s.cv_scheme = text;
    else if (key == "folds") s.folds = parse_value<std::size_t>(key, text);
    else if (key == "svm_c") s.svm_c = parse_value<double>(key, text);
    else throw FormatError("config: unknown key " + key);
  }
}

// --- tensors -------------------------------------------------------------------

namespace {

json tensor_json(const Tensor& t) { return {{"shape", t.shape()}, {"values", t.storage()}}; }

Tensor tensor_from(const json& j) {
  return Tensor(j.at("shape").get<diff::Shape>(), j.at("values").get<std::vector<double>>());
}

json train_json(const inference::TrainConfig& c) {
  return {{"lr_lambda", c.lr_lambda}, {"lr_theta", c.lr_theta},     {"epochs", c.epochs},
          {"patience", c.patience},   {"decay", c.decay},           {"particles", c.particles},
          {"batch_size", c.batch_size}, {"seed", c.seed}};
}

inference::TrainConfig train_from(const json& j) {
  inference::TrainConfig c;
  c.lr_lambda = j.at("lr_lambda").get<double>();
  c.lr_theta = j.at("lr_theta").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.decay = j.at("decay").get<double>();
  c.particles = j.at("particles").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json generative_json(const model::GenerativeConfig& c) {
  return {{"factors", c.factors}, {"embedding_dim", c.embedding_dim}};
}

model::GenerativeConfig generative_from(const json& j) {
  return model::GenerativeConfig{j.at("factors").get<std::size_t>(),
                                 j.at("embedding_dim").get<std::size_t>()};
}

template <typename F>
auto guarded(const std::string& what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  } catch (const ContractError& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace

// --- synthetic design and ground truth ---------------------------------------

std::string design_json(const synth::SynthDesign& d) {
  json centers = json::array();
  for (const auto& c : d.centers) centers.push_back({c[0], c[1], c[2]});
  const json j = {{"groups", d.groups},
                  {"participants_per_group", d.participants_per_group},
                  {"categories", d.categories},
                  {"stimuli_per_category", d.stimuli_per_category},
                  {"time_points", d.time_points},
                  {"voxels", d.voxels},
                  {"stimulus_means", d.stimulus_means},
                  {"stimulus_sd", d.stimulus_sd},
                  {"participant_means", d.participant_means},
                  {"participant_sd", d.participant_sd},
                  {"centers", centers},
                  {"width_mean", d.width_mean},
                  {"width_sd", d.width_sd},
                  {"weight_sd", d.weight_sd},
                  {"noise_sd", d.noise_sd},
                  {"task_gain_sd", d.task_gain_sd},
                  {"seed", d.seed}};
  return j.dump(2) + "\n";
}

synth::SynthDesign parse_design_json(const std::string& text) {
  return guarded("design", [&] {
    const json j = json::parse(text);
    // Missing keys keep their default values.
    synth::SynthDesign d = synth::SynthDesign::defaults();
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("groups", d.groups);
    get("participants_per_group", d.participants_per_group);
    get("categories", d.categories);
    get("stimuli_per_category", d.stimuli_per_category);
    get("time_points", d.time_points);
    get("voxels", d.voxels);
    get("stimulus_means", d.stimulus_means);
    get("stimulus_sd", d.stimulus_sd);
    get("participant_means", d.participant_means);
    get("participant_sd", d.participant_sd);
    if (j.contains("centers")) {
      d.centers.clear();
      for (const json& c : j.at("centers")) {
        const auto v = c.get<std::vector<double>>();
        if (v.size() != 3) throw FormatError("design: centers need three coordinates");
        d.centers.push_back({v[0], v[1], v[2]});
      }
    }
    get("width_mean", d.width_mean);
    get("width_sd", d.width_sd);
    get("weight_sd", d.weight_sd);
    get("noise_sd", d.noise_sd);
    get("task_gain_sd", d.task_gain_sd);
    get("seed", d.seed);
    d.validate();
    return d;
  });
}

std::string ground_truth_json(const synth::GroundTruth& t) {
  json j;
  auto tensors = [](const std::vector<Tensor>& v) {
    json a = json::array();
    for (const Tensor& x : v) a.push_back(tensor_json(x));
    return a;
  };
  j["participant_embeddings"] = tensors(t.participant_embeddings);
  j["stimulus_embeddings"] = tensors(t.stimulus_embeddings);
  j["centers"] = tensor_json(t.centers);
  j["log_widths"] = tensor_json(t.log_widths);
  j["participant_group"] = t.participant_group;
  j["stimulus_category"] = t.stimulus_category;
  j["category_names"] = t.category_names;
  j["weights"] = tensors(t.weights);
  return j.dump() + "\n";
}

synth::GroundTruth parse_ground_truth_json(const std::string& text) {
  return guarded("ground truth", [&] {
    const json j = json::parse(text);
    synth::GroundTruth t;
    for (const json& x : j.at("participant_embeddings")) t.participant_embeddings.push_back(tensor_from(x));
    for (const json& x : j.at("stimulus_embeddings")) t.stimulus_embeddings.push_back(tensor_from(x));
    t.centers = tensor_from(j.at("centers"));
    t.log_widths = tensor_from(j.at("log_widths"));
    j.at("participant_group").get_to(t.participant_group);
    j.at("stimulus_category").get_to(t.stimulus_category);
    j.at("category_names").get_to(t.category_names);
    for (const json& x : j.at("weights")) t.weights.push_back(tensor_from(x));
    return t;
  });
}

// --- metrics -----------------------------------------------------------------

std::string metrics_json(const MetricsRecord& r) {
  json per_trial = json::array();
  for (const TrialMetric& m : r.per_trial) {
    per_trial.push_back({{"trial", m.trial},
                         {"participant", m.participant},
                         {"stimulus", m.stimulus},
                         {"bound", m.bound}});
  }
  const json j = {{"model", r.model},
                  {"split", r.split},
                  {"seed", r.seed},
                  {"particles", r.particles},
                  {"train_config", train_json(r.train)},
                  {"generative_config", generative_json(r.generative)},
                  {"parameter_count", r.parameter_count},
                  {"log_predictive", r.log_predictive},
                  {"per_trial", per_trial}};
  return j.dump(2) + "\n";
}

MetricsRecord parse_metrics_json(const std::string& text) {
  return guarded("metrics", [&] {
    const json j = json::parse(text);
    MetricsRecord r;
    r.model = j.at("model").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.particles = j.at("particles").get<std::size_t>();
    r.train = train_from(j.at("train_config"));
    r.generative = generative_from(j.at("generative_config"));
    r.parameter_count = j.at("parameter_count").get<std::size_t>();
    r.log_predictive = j.at("log_predictive").get<double>();
    for (const json& m : j.at("per_trial")) {
      r.per_trial.push_back(TrialMetric{m.at("trial").get<std::size_t>(),
                                        m.at("participant").get<std::size_t>(),
                                        m.at("stimulus").get<std::size_t>(),
                                        m.at("bound").get<double>()});
    }
    return r;
  });
}

// --- model archive -------------------------------------------------------------

namespace {

constexpr const char* kArchiveFormat = "ntfa-model";
constexpr int kArchiveVersion = 1;

json mlp_json(const model::Mlp& net) {
  json layers = json::array();
  for (const model::LinearLayer& l : net.layers) {
    layers.push_back({{"weight", tensor_json(l.weight)}, {"bias", tensor_json(l.bias)}});
  }
  json slopes = json::array();
  for (const Tensor& s : net.slopes) slopes.push_back(tensor_json(s));
  return {{"layers", layers}, {"slopes", slopes}};
}

model::Mlp mlp_from(const json& j) {
  model::Mlp net;
  for (const json& l : j.at("layers")) {
    net.layers.push_back(model::LinearLayer{tensor_from(l.at("weight")), tensor_from(l.at("bias"))});
  }
  for (const json& s : j.at("slopes")) net.slopes.push_back(tensor_from(s));
  return net;
}

json normals_json(const std::vector<inference::NormalParams>& v) {
  json a = json::array();
  for (const auto& p : v) a.push_back({{"mean", tensor_json(p.mean)}, {"log_scale", tensor_json(p.log_scale)}});
  return a;
}

std::vector<inference::NormalParams> normals_from(const json& j) {
  std::vector<inference::NormalParams> out;
  for (const json& p : j) {
    inference::NormalParams np{tensor_from(p.at("mean")), tensor_from(p.at("log_scale"))};
    if (np.mean.shape() != np.log_scale.shape()) {
      throw FormatError("archive: mean and log-scale shapes differ");
    }
    out.push_back(std::move(np));
  }
  return out;
}

}  // namespace

void save_model(const fs::path& dir, const ModelArchive& archive) {
  const inference::FitResult& fit = archive.fit;
  fs::create_directories(dir);
  const json theta = {{"factor_net", mlp_json(fit.params.factor_net)},
                      {"weight_net", mlp_json(fit.params.weight_net)},
                      {"log_sigma_y", tensor_json(fit.params.log_sigma_y)}};
  const json lambda = {{"participant_embeddings", normals_json(fit.state.participant_embeddings)},
                       {"stimulus_embeddings", normals_json(fit.state.stimulus_embeddings)},
                       {"centers", normals_json(fit.state.centers)},
                       {"log_widths", normals_json(fit.state.log_widths)},
                       {"weights", normals_json(fit.state.weights)}};
  const json manifest = {{"format", kArchiveFormat},
                         {"version", kArchiveVersion},
                         {"train_config", train_json(archive.train)},
                         {"generative_config", generative_json(fit.params.config)},
                         {"generative_parameters", fit.params.parameter_count()},
                         {"variational_parameters", fit.state.parameter_count()},
                         {"files", {{"theta", "theta.json"},
                                    {"lambda", "lambda.json"},
                                    {"loss_trace", "loss_trace.json"}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "theta.json", theta.dump() + "\n");
  write_text(dir / "lambda.json", lambda.dump() + "\n");
  write_text(dir / "loss_trace.json", json(fit.loss_trace).dump() + "\n");
}

ModelArchive load_model(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("missing model manifest " + manifest_path.string());
  return guarded(dir.string(), [&] {
    const json m = json::parse(read_text(manifest_path));
    if (m.at("format").get<std::string>() != kArchiveFormat ||
        m.at("version").get<int>() != kArchiveVersion) {
      throw FormatError(manifest_path.string() + ": not a supported model archive");
    }
    ModelArchive a;
    a.train = train_from(m.at("train_config"));
    const json& files = m.at("files");
    const json theta = json::parse(read_text(dir / files.at("theta").get<std::string>()));
    const json lambda = json::parse(read_text(dir / files.at("lambda").get<std::string>()));
    const json trace = json::parse(read_text(dir / files.at("loss_trace").get<std::string>()));
    model::GenerativeParams& p = a.fit.params;
    p.config = generative_from(m.at("generative_config"));
    p.config.validate();
    p.factor_net = mlp_from(theta.at("factor_net"));
    p.weight_net = mlp_from(theta.at("weight_net"));
    p.log_sigma_y = tensor_from(theta.at("log_sigma_y"));
    if (p.parameter_count() != model::generative_parameter_count(p.config.factors, p.config.embedding_dim) ||
        p.factor_net.output_dim() != 8 * p.config.factors ||
        p.weight_net.output_dim() != 2 * p.config.factors) {
      throw FormatError(dir.string() + ": network shapes disagree with the configuration");
    }
    inference::VariationalState& q = a.fit.state;
    q.participant_embeddings = normals_from(lambda.at("participant_embeddings"));
    q.stimulus_embeddings = normals_from(lambda.at("stimulus_embeddings"));
    q.centers = normals_from(lambda.at("centers"));
    q.log_widths = normals_from(lambda.at("log_widths"));
    q.weights = normals_from(lambda.at("weights"));
    if (q.parameter_count() != m.at("variational_parameters").get<std::size_t>()) {
      throw FormatError(dir.string() + ": variational state size disagrees with the manifest");
    }
    a.fit.loss_trace = trace.get<std::vector<double>>();
    return a;
  });
}

}  // namespace ntfa::io
