#include "recbase/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "recbase/errors.hpp"

namespace recbase {

namespace {

std::string_view artifact_name(TrainedModel::Artifact a) {
  switch (a) {
    case TrainedModel::Artifact::popularity:
      return "popularity";
    case TrainedModel::Artifact::item_neighborhood:
      return "item_neighborhood";
    case TrainedModel::Artifact::user_neighborhood:
      return "user_neighborhood";
  }
  return "popularity";
}

TrainedModel::Artifact parse_artifact(const std::string& s) {
  if (s == "popularity") return TrainedModel::Artifact::popularity;
  if (s == "item_neighborhood") return TrainedModel::Artifact::item_neighborhood;
  if (s == "user_neighborhood") return TrainedModel::Artifact::user_neighborhood;
  throw InvalidConfig("unknown model artifact '" + s + "'");
}

std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
  out << "# recbase-model 1\n";
  out << "# kind=" << to_string(model.kind()) << '\n';
  out << "# artifact=" << artifact_name(model.artifact()) << '\n';
  out << "# n_users=" << model.n_users() << '\n';
  out << "# n_items=" << model.n_items() << '\n';
  out << "# params=" << to_json(model.params()).dump() << '\n';
  if (model.artifact() == TrainedModel::Artifact::popularity) {
    const auto pop = model.popularity_scores();
    for (std::size_t i = 0; i < pop.size(); ++i) out << i << "\t0\t" << format_real(pop[i]) << '\n';
    return;
  }
  const auto& w = model.weights();
  for (Index t = 0; t < w.n(); ++t) {
    for (const auto& nb : w.row(t)) out << t << '\t' << nb.index << '\t' << format_real(nb.value) << '\n';
  }
}

void save_model(const std::string& path, const TrainedModel& model) {
  std::ofstream out(path);
  if (!out) throw FileNotFound("cannot write " + path);
  save_model(out, model);
}

TrainedModel load_model(std::istream& in, InteractionPtr train) {
  std::string line;
  std::string kind;
  std::string artifact;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  Configuration params;
  std::vector<std::vector<Neighbor>> rows;
  std::vector<double> pop;
  std::size_t line_no = 0;
  bool body = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (body) throw ParseError("model", line_no, "header after body");
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "kind") kind = value;
      else if (key == "artifact") artifact = value;
      else if (key == "n_users") n_users = std::stoull(value);
      else if (key == "n_items") n_items = std::stoull(value);
      else if (key == "params") params = configuration_from_json(nlohmann::json::parse(value));
      continue;
    }
    if (!body) {
      body = true;
      if (n_users != train->n_rows() || n_items != train->n_cols()) {
        throw DimensionMismatch("model dimensions differ from training matrix");
      }
      const auto a = parse_artifact(artifact);
      if (a == TrainedModel::Artifact::popularity) pop.assign(n_items, 0.0);
      else rows.resize(a == TrainedModel::Artifact::user_neighborhood ? n_users : n_items);
    }
    std::istringstream fields(line);
    std::size_t t = 0;
    std::size_t s = 0;
    double v = 0.0;
    if (!(fields >> t >> s >> v)) throw ParseError("model", line_no, "expected target, source, weight");
    if (!pop.empty()) {
      if (t >= pop.size()) throw ParseError("model", line_no, "item out of range");
      pop[t] = v;
    } else {
      if (t >= rows.size() || s >= rows.size()) throw ParseError("model", line_no, "index out of range");
      rows[t].push_back({static_cast<Index>(s), v});
    }
  }

  const auto model_kind = parse_model_kind(kind);
  const auto a = parse_artifact(artifact);
  if (!body) {
    if (a == TrainedModel::Artifact::popularity) pop.assign(n_items, 0.0);
    else rows.resize(a == TrainedModel::Artifact::user_neighborhood ? n_users : n_items);
  }
  auto model = [&]() {
    switch (a) {
      case TrainedModel::Artifact::popularity:
        return TrainedModel::popularity(model_kind, train, std::move(pop));
      case TrainedModel::Artifact::item_neighborhood:
        return TrainedModel::item_neighborhood(model_kind, train, SimilarityMatrix(std::move(rows)));
      case TrainedModel::Artifact::user_neighborhood:
        break;
    }
    return TrainedModel::user_neighborhood(model_kind, train, SimilarityMatrix(std::move(rows)));
  }();
  if (const auto it = params.find("normalize_scores"); it != params.end()) {
    model.set_normalize_scores(as_flag(it->second, "normalize_scores"));
  }
  model.set_params(std::move(params));
  return model;
}

TrainedModel load_model(const std::string& path, InteractionPtr train) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open " + path);
  return load_model(in, std::move(train));
}

}  // namespace recbase
