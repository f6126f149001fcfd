#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deephazard/data.hpp"
#include "deephazard/predict.hpp"
#include "deephazard/simulate.hpp"
#include "deephazard/step_function.hpp"
#include "deephazard/train.hpp"

namespace deephazard {

inline constexpr const char* kToolVersion = "1.0.0";

// Shortest round-trip formatting; locale-independent on both ends, which is
// what makes fixed-seed runs byte-identical.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw std::invalid_argument(context + ": not a number: '" + s + "'");
  return v;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace detail

struct Outcome {
  std::string id;
  double time = 0.0;
  int event = 0;
};

inline void write_outcomes_csv(const std::string& path, const std::vector<Outcome>& rows) {
  auto out = detail::open_out(path);
  out << "id,time,event\n";
  for (const auto& r : rows)
    out << r.id << ',' << format_double(r.time) << ',' << r.event << '\n';
}

inline std::vector<Outcome> read_outcomes_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) != std::vector<std::string>{"id", "time", "event"})
    throw std::invalid_argument(path + ": expected header 'id,time,event'");
  std::vector<Outcome> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3) throw std::invalid_argument(path + ": expected 3 fields, got line '" + line + "'");
    Outcome o;
    o.id = f[0];
    o.time = parse_double(f[1], path);
    o.event = static_cast<int>(parse_double(f[2], path));
    if (o.event != 0 && o.event != 1)
      throw std::invalid_argument(path + ": event must be 0 or 1 for id " + o.id);
    rows.push_back(std::move(o));
  }
  return rows;
}

// Long-format covariates: one row per (subject, measurement time). Supports
// per-subject measurement schedules; alignment to the model grid happens
// downstream.
struct CovariateSeries {
  std::vector<double> times;                 // ascending
  std::vector<std::vector<double>> values;   // one vector of size p per time
};

inline void write_covariates_csv(const std::string& path,
                                 const std::vector<std::pair<std::string, CovariateSeries>>& subjects,
                                 std::size_t p) {
  auto out = detail::open_out(path);
  out << "id,measurement_time";
  for (std::size_t k = 1; k <= p; ++k) out << ",z" << k;
  out << '\n';
  for (const auto& [id, series] : subjects) {
    for (std::size_t m = 0; m < series.times.size(); ++m) {
      out << id << ',' << format_double(series.times[m]);
      for (double v : series.values[m]) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

inline std::map<std::string, CovariateSeries> read_covariates_csv(const std::string& path,
                                                                  std::size_t* p_out = nullptr) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "measurement_time")
    throw std::invalid_argument(path + ": expected header 'id,measurement_time,z1,...'");
  for (std::size_t k = 2; k < header.size(); ++k)
    if (header[k] != "z" + std::to_string(k - 1))
      throw std::invalid_argument(path + ": covariate columns must be named z1..zp in order");
  const std::size_t p = header.size() - 2;
  if (p_out) *p_out = p;

  std::map<std::string, CovariateSeries> subjects;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw std::invalid_argument(path + ": wrong field count in line '" + line + "'");
    const double t = parse_double(f[1], path);
    std::vector<double> z(p);
    for (std::size_t k = 0; k < p; ++k) z[k] = parse_double(f[2 + k], path);
    auto& series = subjects[f[0]];
    if (!series.times.empty() && t < series.times.back())
      throw std::invalid_argument(path + ": measurement times must be ascending per subject (id " +
                                  f[0] + ")");
    series.times.push_back(t);
    series.values.push_back(std::move(z));
  }
  if (subjects.empty()) throw std::invalid_argument(path + ": no data rows");
  return subjects;
}

// Truth sidecar for simulated data: enough to rebuild the exact conditional
// survival of every subject (model name + base covariate draw).
inline void write_truth_csv(const std::string& path, const SimOutput& sim) {
  auto out = detail::open_out(path);
  out << "id,model";
  for (std::size_t k = 1; k <= sim.spec.dim; ++k) out << ",z0" << k;
  out << '\n';
  for (std::size_t i = 0; i < sim.records.size(); ++i) {
    out << sim.records[i].id << ',' << sim.spec.name;
    for (double v : sim.z0[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

struct TruthSidecar {
  std::string model;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> z0;
};

inline TruthSidecar read_truth_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "model")
    throw std::invalid_argument(path + ": expected header 'id,model,z01,...'");
  TruthSidecar truth;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw std::invalid_argument(path + ": wrong field count in line '" + line + "'");
    if (truth.model.empty())
      truth.model = f[1];
    else if (truth.model != f[1])
      throw std::invalid_argument(path + ": mixed model names in truth sidecar");
    truth.ids.push_back(f[0]);
    std::vector<double> z(f.size() - 2);
    for (std::size_t k = 0; k + 2 < f.size(); ++k) z[k] = parse_double(f[k + 2], path);
    truth.z0.push_back(std::move(z));
  }
  if (truth.ids.empty()) throw std::invalid_argument(path + ": no data rows");
  return truth;
}

inline void write_predictions_csv(const std::string& path, const std::vector<SurvivalCurve>& curves) {
  auto out = detail::open_out(path);
  out << "id,eval_time,survival\n";
  for (const auto& c : curves)
    for (std::size_t k = 0; k < c.eval_times.size(); ++k)
      out << c.id << ',' << format_double(c.eval_times[k]) << ',' << format_double(c.values[k])
          << '\n';
}

inline std::vector<SurvivalCurve> read_predictions_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) ||
      detail::split_csv_line(line) != std::vector<std::string>{"id", "eval_time", "survival"})
    throw std::invalid_argument(path + ": expected header 'id,eval_time,survival'");
  std::map<std::string, SurvivalCurve> by_id;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3) throw std::invalid_argument(path + ": wrong field count in line '" + line + "'");
    auto& curve = by_id[f[0]];
    if (curve.id.empty()) {
      curve.id = f[0];
      order.push_back(f[0]);
    }
    const double t = parse_double(f[1], path);
    if (!curve.eval_times.empty() && t <= curve.eval_times.back())
      throw std::invalid_argument(path + ": eval times must be strictly ascending per subject (id " +
                                  f[0] + ")");
    curve.eval_times.push_back(t);
    curve.values.push_back(parse_double(f[2], path));
  }
  std::vector<SurvivalCurve> curves;
  curves.reserve(order.size());
  for (const auto& id : order) curves.push_back(std::move(by_id[id]));
  if (curves.empty()) throw std::invalid_argument(path + ": no data rows");
  return curves;
}

inline void write_loss_curves_csv(const std::string& path, const std::vector<IntervalReport>& reports) {
  auto out = detail::open_out(path);
  out << "interval,epoch,loss\n";
  for (std::size_t j = 0; j < reports.size(); ++j)
    for (std::size_t e = 0; e < reports[j].loss_curve.size(); ++e)
      out << j << ',' << e + 1 << ',' << format_double(reports[j].loss_curve[e]) << '\n';
}

inline void write_ph_csv(const std::string& path,
                         const std::vector<std::pair<double, double>>& series) {
  auto out = detail::open_out(path);
  out << "time,ratio\n";
  for (const auto& [t, ratio] : series)
    out << format_double(t) << ',' << format_double(ratio) << '\n';
}

// Model file: versioned JSON holding the grid, every layer's shape, activation
// and parameters (row-major), and the baseline step function.
inline nlohmann::json model_to_json(const DeepHazardModel& model) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["tool_version"] = kToolVersion;
  doc["grid"] = {{"points", model.grid.points}, {"tau", model.grid.tau}};
  doc["baseline"] = {{"knots", model.baseline.knots}, {"values", model.baseline.values}};
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& net : model.networks) {
    nlohmann::json jn;
    jn["input_dim"] = net.input_dim;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.hidden) {
      layers.push_back({{"rows", layer.weights.rows},
                        {"cols", layer.weights.cols},
                        {"weights", layer.weights.data},
                        {"bias", layer.bias},
                        {"activation", activation_name(layer.activation.kind)},
                        {"alpha", layer.activation.alpha},
                        {"dropout", layer.dropout}});
    }
    jn["hidden"] = std::move(layers);
    jn["out_weights"] = net.out_weights;
    jn["out_bias"] = net.out_bias;
    nets.push_back(std::move(jn));
  }
  doc["networks"] = std::move(nets);
  return doc;
}

inline DeepHazardModel model_from_json(const nlohmann::json& doc) {
  if (!doc.contains("format_version") || doc.at("format_version").get<int>() != 1)
    throw std::invalid_argument("model file: unsupported format version");
  DeepHazardModel model;
  model.grid.points = doc.at("grid").at("points").get<std::vector<double>>();
  model.grid.tau = doc.at("grid").at("tau").get<double>();
  model.grid.validate();
  model.baseline = StepFunction(doc.at("baseline").at("knots").get<std::vector<double>>(),
                                doc.at("baseline").at("values").get<std::vector<double>>());
  for (const auto& jn : doc.at("networks")) {
    IntervalNetwork net;
    net.input_dim = jn.at("input_dim").get<std::size_t>();
    for (const auto& jl : jn.at("hidden")) {
      DenseLayer layer;
      layer.weights.rows = jl.at("rows").get<std::size_t>();
      layer.weights.cols = jl.at("cols").get<std::size_t>();
      layer.weights.data = jl.at("weights").get<std::vector<double>>();
      if (layer.weights.data.size() != layer.weights.rows * layer.weights.cols)
        throw std::invalid_argument("model file: weight array size does not match shape");
      layer.bias = jl.at("bias").get<std::vector<double>>();
      if (layer.bias.size() != layer.weights.rows)
        throw std::invalid_argument("model file: bias length does not match rows");
      layer.activation.kind = activation_from_name(jl.at("activation").get<std::string>());
      layer.activation.alpha = jl.at("alpha").get<double>();
      layer.dropout = jl.at("dropout").get<double>();
      net.hidden.push_back(std::move(layer));
    }
    net.out_weights = jn.at("out_weights").get<std::vector<double>>();
    net.out_bias = jn.at("out_bias").get<double>();
    if (net.out_weights.size() != net.last_width())
      throw std::invalid_argument("model file: output weight length does not match last layer");
    model.networks.push_back(std::move(net));
  }
  if (model.networks.size() != model.grid.intervals())
    throw std::invalid_argument("model file: expected one network per grid interval");
  return model;
}

inline void save_model(const std::string& path, const DeepHazardModel& model) {
  auto out = detail::open_out(path);
  out << model_to_json(model).dump(2) << '\n';
}

inline DeepHazardModel load_model(const std::string& path) {
  auto in = detail::open_in(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": invalid JSON: " + e.what());
  }
  return model_from_json(doc);
}

inline void write_manifest(const std::string& path, const nlohmann::json& manifest) {
  auto out = detail::open_out(path);
  out << manifest.dump(2) << '\n';
}

}  // namespace deephazard
