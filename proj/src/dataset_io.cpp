#include <hessmc/dataset_io.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hessmc {

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << body;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

DatasetFiles dataset_paths(const std::filesystem::path& dir, ModelKind model, std::uint64_t seed) {
  const std::string stem = std::string(to_string(model)) + "_seed" + std::to_string(seed);
  return {dir / (stem + ".csv"), dir / (stem + ".json")};
}

std::string dataset_csv(const Dataset& data) {
  std::string out = "t,y\n";
  for (std::size_t t = 0; t < data.observations.size(); ++t) {
    const double y = data.observations[t];
    out += std::to_string(t + 1);
    out += ',';
    out += data.model == ModelKind::sir ? std::to_string(std::llround(y)) : format_double(y);
    out += '\n';
  }
  return out;
}

std::string dataset_sidecar(const Dataset& data) {
  nlohmann::ordered_json j;
  j["model"] = std::string(to_string(data.model));
  j["true_theta"] = std::vector<double>(data.true_theta.begin(), data.true_theta.end());
  j["T"] = data.observations.size();
  j["seed"] = data.seed;
  return j.dump(2) + "\n";
}

DatasetFiles write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  const auto files = dataset_paths(dir, data.model, data.seed);
  write_file(files.csv, dataset_csv(data));
  write_file(files.json, dataset_sidecar(data));
  return files;
}

Dataset read_dataset(const std::filesystem::path& csv_path) {
  auto json_path = csv_path;
  json_path.replace_extension(".json");

  Dataset data;
  try {
    const auto meta = nlohmann::json::parse(read_file(json_path));
    data.model = parse_model_kind(meta.at("model").get<std::string>());
    const auto theta = meta.at("true_theta").get<std::vector<double>>();
    data.true_theta = Vector(std::span<const double>(theta));
    data.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed sidecar " + json_path.string() + ": " + e.what());
  }

  std::istringstream lines(read_file(csv_path));
  std::string line;
  std::getline(lines, line);
  if (line != "t,y") throw IoError("unexpected header in " + csv_path.string());
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("malformed row in " + csv_path.string() + ": " + line);
    try {
      data.observations.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw IoError("malformed value in " + csv_path.string() + ": " + line);
    }
  }
  if (data.observations.empty()) throw IoError("no observations in " + csv_path.string());
  return data;
}

}  // namespace hessmc
