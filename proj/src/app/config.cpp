#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eegcn/app.hpp"
#include "eegcn/util.hpp"

namespace eegcn::app {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw UsageError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError("config key '" + std::string(key) + "': expected true/false, got '" + std::string(value) + "'");
}

std::string fmt_double(double v) {
  // shortest round-trip representation
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  auto& m = model;
  auto& t = train;
  if (key == "embed_dim") m.embed_dim = parse_number<std::size_t>(key, value);
  else if (key == "hidden_dim") m.hidden_dim = parse_number<std::size_t>(key, value);
  else if (key == "gcn_layers") m.gcn_layers = parse_number<std::size_t>(key, value);
  else if (key == "transformer_blocks") m.transformer_blocks = parse_number<std::size_t>(key, value);
  else if (key == "heads") m.heads = parse_number<std::size_t>(key, value);
  else if (key == "ffn_dim") m.ffn_dim = parse_number<std::size_t>(key, value);
  else if (key == "dropout") m.dropout = parse_number<double>(key, value);
  else if (key == "init_range") m.init_range = parse_number<double>(key, value);
  else if (key == "no_dependency") m.no_dependency = parse_bool(key, value);
  else if (key == "no_edge_weight") m.no_edge_weight = parse_bool(key, value);
  else if (key == "no_bidirectional") m.no_bidirectional = parse_bool(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_number<double>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "max_epochs") t.max_epochs = parse_number<std::size_t>(key, value);
  else if (key == "l2") t.l2 = parse_number<double>(key, value);
  else if (key == "patience") t.patience = parse_number<std::size_t>(key, value);
  else if (key == "min_count") min_count = parse_number<std::size_t>(key, value);
  else if (key == "seed") set_seed(parse_number<std::uint64_t>(key, value));
  else throw UsageError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::set_seed(std::uint64_t seed) {
  model.seed = seed;
  train.seed = seed;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    set(trim(sv.substr(0, eq)), sv.substr(eq + 1));
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  const nlohmann::json j = to_json();
  for (const auto& [key, value] : j.items()) {
    os << key << " = " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  return os.str();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = model::config_to_json(model);
  const nlohmann::json tj = train::train_config_to_json(train);
  for (const auto& [k, v] : tj.items()) j[k] = v;
  j["min_count"] = min_count;
  // doubles as shortest round-trip text so manifests reload bit-exactly
  for (const char* key : {"dropout", "init_range", "learning_rate", "l2"}) j[key] = fmt_double(j[key].get<double>());
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    c.set(key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return c;
}

// ---- manifest --------------------------------------------------------------

nlohmann::json RunManifest::to_json() const {
  nlohmann::json inputs_json = {{"train", inputs.train.string()},
                                {"test", inputs.test.string()},
                                {"parses_train", inputs.parses_train.string()},
                                {"parses_test", inputs.parses_test.string()},
                                {"glove", inputs.glove.string()}};
  nlohmann::json digest_json = nlohmann::json::object();
  for (const auto& [role, d] : digests) digest_json[role] = d;
  nlohmann::json j = {{"format", "eegcn-manifest"},
                      {"version", 1},
                      {"command", command},
                      {"config", config.to_json()},
                      {"seed", config.train.seed},
                      {"inputs", inputs_json},
                      {"digests", digest_json},
                      {"output_dir", output_dir.string()},
                      {"started_at", started_at}};
  if (!finished_at.empty()) j["finished_at"] = finished_at;
  if (variant) j["variant"] = *variant;
  if (!layers.empty()) j["layers"] = layers;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "eegcn-manifest") throw UsageError("not an eegcn run manifest");
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = RunConfig::from_json(j.at("config"));
  const auto& in = j.at("inputs");
  m.inputs = {in.at("train").get<std::string>(), in.at("test").get<std::string>(),
              in.at("parses_train").get<std::string>(), in.at("parses_test").get<std::string>(),
              in.at("glove").get<std::string>()};
  for (const auto& [role, d] : j.at("digests").items()) m.digests.emplace_back(role, d.get<std::string>());
  m.output_dir = j.at("output_dir").get<std::string>();
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  if (j.contains("variant")) m.variant = j.at("variant").get<std::string>();
  if (j.contains("layers")) m.layers = j.at("layers").get<std::vector<std::size_t>>();
  return m;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed manifest " + path.string() + ": " + e.what());
  }
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << to_json().dump(2) << '\n';
}

void RunManifest::verify_inputs() const {
  const std::vector<std::pair<std::string, std::filesystem::path>> roles = {
      {"train", inputs.train},
      {"test", inputs.test},
      {"parses_train", inputs.parses_train},
      {"parses_test", inputs.parses_test},
      {"glove", inputs.glove}};
  for (const auto& [role, digest] : digests) {
    for (const auto& [r, path] : roles) {
      if (r != role) continue;
      std::string actual;
      try {
        actual = sha256_file(path);
      } catch (const std::exception&) {
        throw corpus::DataError(path.string(), 0, "input listed in the manifest is missing");
      }
      if (actual != digest) throw corpus::DataError(path.string(), 0, "input digest differs from the manifest");
    }
  }
}

RunManifest make_manifest(std::string command, const RunConfig& config, const DataPaths& paths,
                          const std::filesystem::path& out) {
  RunManifest m;
  m.command = std::move(command);
  m.config = config;
  auto absolute = [](const std::filesystem::path& p) { return p.empty() ? p : std::filesystem::absolute(p); };
  m.inputs = {absolute(paths.train), absolute(paths.test), absolute(paths.parses_train), absolute(paths.parses_test),
              absolute(paths.glove)};
  for (const auto& [role, path] : std::vector<std::pair<std::string, std::filesystem::path>>{
           {"train", m.inputs.train},
           {"test", m.inputs.test},
           {"parses_train", m.inputs.parses_train},
           {"parses_test", m.inputs.parses_test},
           {"glove", m.inputs.glove}}) {
    try {
      m.digests.emplace_back(role, sha256_file(path));
    } catch (const std::exception&) {
      throw corpus::DataError(path.string(), 0, "cannot read input file");
    }
  }
  m.output_dir = absolute(out);
  m.started_at = now_iso8601();
  return m;
}

std::string utc_timestamp() { return now_iso8601(); }

}  // namespace eegcn::app
