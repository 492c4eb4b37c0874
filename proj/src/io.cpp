#include "loos/io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace loos {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string rule_name(const Method& m) { return m.rule ? m.rule->name() : ""; }

}  // namespace

void write_dataset_json(std::ostream& out, const Dataset& data) {
  data.validate();
  const ModelSpec& m = data.model;
  Json j;
  j["format"] = "loos-dataset";
  j["version"] = 1;
  j["model"] = to_string(m.kind);
  j["lattice"] = {{"nx", m.lattice.nx},
                  {"ny", m.lattice.ny},
                  {"x_range", {m.lattice.x_min, m.lattice.x_max}},
                  {"y_range", {m.lattice.y_min, m.lattice.y_max}}};
  if (m.covariates) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.covariates->rows(); ++i) {
      const auto r = m.covariates->row(i);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["covariates"] = rows;
  } else {
    j["covariates"] = nullptr;
  }
  if (data.truth) {
    Json t = {{"tau", data.truth->tau()}, {"kappa", data.truth->kappa()}};
    if (data.truth->log_sigma_eps) t["sigma_eps"] = data.truth->sigma_eps();
    t["beta"] = data.truth->beta;
    j["truth"] = t;
  } else {
    j["truth"] = nullptr;
  }
  j["obs_indices"] = m.obs_indices;
  j["replicates"] = data.replicates;
  Json log = Json::array();
  for (const auto& o : data.outlier_log)
    log.push_back({{"replicate", o.replicate},
                   {"index", o.index},
                   {"original", o.original},
                   {"replaced", o.replaced}});
  j["outliers"] = log;
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing dataset");
}

Dataset read_dataset_json(std::istream& in) {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("dataset is not valid JSON: ") + e.what());
  }
  Dataset d;
  try {
    if (j.at("format") != "loos-dataset") throw std::invalid_argument("not a dataset file");
    if (j.at("version") != 1) throw std::invalid_argument("unsupported dataset version");
    ModelSpec& m = d.model;
    m.kind = parse_model_kind(j.at("model").get<std::string>());
    const Json& l = j.at("lattice");
    m.lattice.nx = l.at("nx").get<std::size_t>();
    m.lattice.ny = l.at("ny").get<std::size_t>();
    const auto xr = l.at("x_range").get<std::vector<double>>();
    const auto yr = l.at("y_range").get<std::vector<double>>();
    if (xr.size() != 2 || yr.size() != 2) throw std::invalid_argument("lattice ranges need 2 values");
    m.lattice.x_min = xr[0];
    m.lattice.x_max = xr[1];
    m.lattice.y_min = yr[0];
    m.lattice.y_max = yr[1];
    if (!j.at("covariates").is_null())
      m.covariates =
          DenseMatrix::from_rows(j.at("covariates").get<std::vector<std::vector<double>>>());
    m.obs_indices = j.at("obs_indices").get<std::vector<std::size_t>>();
    if (!j.at("truth").is_null()) {
      const Json& t = j.at("truth");
      std::optional<double> s;
      if (t.contains("sigma_eps")) s = t.at("sigma_eps").get<double>();
      d.truth = Theta::natural(t.at("tau").get<double>(), t.at("kappa").get<double>(), s,
                               t.value("beta", std::vector<double>{}));
    }
    d.replicates = j.at("replicates").get<std::vector<Vector>>();
    for (const auto& o : j.at("outliers"))
      d.outlier_log.push_back({o.at("replicate").get<std::size_t>(),
                               o.at("index").get<std::size_t>(), o.at("original").get<double>(),
                               o.at("replaced").get<double>()});
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed dataset: ") + e.what());
  }
  d.validate();
  return d;
}

void write_replicates_csv(std::ostream& out, const Dataset& data) {
  const ModelSpec& m = data.model;
  out << "replicate,node_index,s1,s2,value,is_outlier\n";
  for (std::size_t r = 0; r < data.replicates.size(); ++r) {
    for (std::size_t k = 0; k < data.replicates[r].size(); ++k) {
      const std::size_t node = m.is_latent() ? m.obs_indices[k] : k;
      const auto s = m.lattice.coord(node);
      bool outlier = false;
      for (const auto& o : data.outlier_log) outlier |= (o.replicate == r && o.index == k);
      out << r << ',' << node << ',' << fmt(s[0]) << ',' << fmt(s[1]) << ','
          << fmt(data.replicates[r][k]) << ',' << (outlier ? 1 : 0) << '\n';
    }
  }
}

void write_fit_report(std::ostream& out, const FitResult& result, const Method& method,
                      const ModelSpec& model) {
  const auto names = model.param_names();
  const auto est = model.pack(result.theta_hat);
  out << "method: " << method.name() << '\n';
  out << "model: " << to_string(model.kind) << " (" << model.lattice.nx << "x" << model.lattice.ny
      << ", " << model.n_obs() << " observations)\n";
  out << "objective: " << fmt(result.objective_value) << '\n';
  out << "evaluations: " << result.n_evaluations << '\n';
  out << "converged: " << (result.converged ? "yes" : "no") << '\n';
  out << "wall_time_s: " << fmt(result.wall_time, 6) << '\n';
  for (std::size_t j = 0; j < names.size(); ++j) out << names[j] << ": " << fmt(est[j]) << '\n';
  if (!model.is_latent() || result.theta_hat.log_sigma_eps) {
    const auto s = interpret_params(result.theta_hat);
    out << "marginal_sd: " << fmt(s.marginal_sd, 6) << '\n';
    out << "practical_range: " << fmt(s.practical_range, 6) << '\n';
  }
}

void write_fit_csv(std::ostream& out, const FitResult& result, const Method& method,
                   const ModelSpec& model, bool header) {
  if (header) out << "method,rule,parameter,estimate,wall_time_s,n_eval,converged\n";
  const auto names = model.param_names();
  const auto est = model.pack(result.theta_hat);
  for (std::size_t j = 0; j < names.size(); ++j)
    out << (method.kind == Method::Kind::Loos ? "loos" : "ml") << ',' << rule_name(method) << ','
        << names[j] << ',' << fmt(est[j]) << ',' << fmt(result.wall_time, 6) << ',' << result.n_evaluations << ','
        << (result.converged ? 1 : 0) << '\n';
}

void write_godambe_report(std::ostream& out, const GodambeResult& result, const Method& method,
                          const ModelSpec& model) {
  const auto names = model.param_names();
  out << "method: " << method.name() << '\n';
  auto matrix = [&](const char* title, const DenseMatrix& m) {
    out << title << ":\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out << ' ';
      for (std::size_t j = 0; j < m.cols(); ++j) out << ' ' << fmt(m(i, j), 10);
      out << '\n';
    }
  };
  matrix("J", result.j);
  matrix("K", result.k);
  matrix("V", result.v);
  for (std::size_t j = 0; j < names.size(); ++j)
    out << "sd " << names[j] << ": " << fmt(result.asymptotic_sd[j], 10) << '\n';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace loos
