#include <fstream>

#include <nlohmann/json.hpp>

#include "nrfi/error.hpp"
#include "nrfi/mlp.hpp"

namespace nrfi {

// Weights are stored per layer as a flat row-major (out x in) list.
nlohmann::json to_json(const Mlp& net) {
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& w = net.weights[l];
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    weights.push_back(std::move(flat));
    biases.push_back(std::vector<double>(net.biases[l].data(), net.biases[l].data() + net.biases[l].size()));
  }
  return {{"layer_sizes", net.layer_sizes}, {"weights", std::move(weights)}, {"biases", std::move(biases)}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  try {
    net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    const auto& jw = j.at("weights");
    const auto& jb = j.at("biases");
    if (net.layer_sizes.size() < 2) throw DimensionError("layer_sizes needs at least two entries");
    if (jw.size() != net.layer_sizes.size() - 1 || jb.size() != jw.size())
      throw DimensionError("layer_sizes lists " + std::to_string(net.layer_sizes.size()) + " layers but the file has " +
                           std::to_string(jw.size()) + " weight and " + std::to_string(jb.size()) + " bias arrays");
    for (std::size_t l = 0; l < jw.size(); ++l) {
      const int in = net.layer_sizes[l];
      const int out = net.layer_sizes[l + 1];
      if (in < 1 || out < 1) throw DimensionError("layer sizes must be at least 1");
      const auto flat = jw[l].get<std::vector<double>>();
      const auto bias = jb[l].get<std::vector<double>>();
      if (flat.size() != static_cast<std::size_t>(in) * static_cast<std::size_t>(out))
        throw DimensionError("layer " + std::to_string(l) + " has " + std::to_string(flat.size()) + " weights, expected " +
                             std::to_string(in * out));
      if (bias.size() != static_cast<std::size_t>(out))
        throw DimensionError("layer " + std::to_string(l) + " has " + std::to_string(bias.size()) + " biases, expected " +
                             std::to_string(out));
      Eigen::MatrixXd w(out, in);
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) w(r, c) = flat[static_cast<std::size_t>(r) * static_cast<std::size_t>(in) + static_cast<std::size_t>(c)];
      net.weights.push_back(std::move(w));
      net.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), out));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network: ") + e.what());
  }
  net.validate();
  return net;
}

void save_mlp(const Mlp& net, const std::filesystem::path& path, const nlohmann::json& extra) {
  auto j = to_json(net);
  if (extra.is_object())
    for (const auto& [key, value] : extra.items()) j[key] = value;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump() << '\n';
}

void save_mlp(const Mlp& net, const std::filesystem::path& path) { save_mlp(net, path, nlohmann::json::object()); }

nlohmann::json load_model_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
}

Mlp load_mlp(const std::filesystem::path& path) { return mlp_from_json(load_model_document(path)); }

}  // namespace nrfi
