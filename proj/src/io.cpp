#include "spinid/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace spinid::io {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& context) {
  if (!j.is_object()) throw ParseError(context + ": expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ParseError(context + ": unknown key \"" + item.key() + "\"");
  }
}

const json& require(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) throw ParseError(context + ": missing key \"" + key + "\"");
  return j.at(key);
}

double number(const json& j, const std::string& context) {
  if (!j.is_number()) throw ParseError(context + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ParseError(context + ": non-finite number");
  return x;
}

int integer(const json& j, const std::string& context) {
  if (!j.is_number_integer()) throw ParseError(context + ": expected an integer");
  return j.get<int>();
}

json couplings_to_json(const std::vector<Edge>& edges, const std::vector<double>& values) {
  json out = json::array();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out.push_back({{"k", edges[e].first}, {"l", edges[e].second}, {"J", round15(values[e])}});
  }
  return out;
}

std::vector<double> rounded(const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(round15(x));
  return out;
}

}  // namespace

double round15(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format15(x).c_str(), nullptr);
}

std::string format15(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", x == 0.0 ? 0.0 : x);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

SpinNetwork parse_network(const json& j) {
  const std::string ctx = "model";
  if (!j.is_object()) throw ParseError(ctx + ": expected an object");
  const int n = integer(require(j, "n", ctx), ctx + ".n");
  if (n < 1 || n > kMaxRealizeSpins) {
    throw ParseError(ctx + ": n must be in 1.." + std::to_string(kMaxRealizeSpins));
  }
  const json& gamma = require(j, "gamma", ctx);
  if (!gamma.is_array() || gamma.size() != static_cast<std::size_t>(n)) {
    throw ParseError(ctx + ".gamma: expected an array of " + std::to_string(n) + " numbers");
  }
  SpinNetwork net(n);
  for (int k = 1; k <= n; ++k) net.set_gamma(k, number(gamma[static_cast<std::size_t>(k - 1)], ctx + ".gamma"));
  if (j.contains("couplings")) {
    const json& cs = j.at("couplings");
    if (!cs.is_array()) throw ParseError(ctx + ".couplings: expected an array");
    std::set<std::pair<int, int>> seen;
    for (const json& c : cs) {
      check_keys(c, {"k", "l", "J"}, ctx + ".couplings[]");
      const int k = integer(require(c, "k", ctx + ".couplings[]"), ctx + ".couplings[].k");
      const int l = integer(require(c, "l", ctx + ".couplings[]"), ctx + ".couplings[].l");
      const double value = number(require(c, "J", ctx + ".couplings[]"), ctx + ".couplings[].J");
      if (!seen.insert({std::min(k, l), std::max(k, l)}).second) {
        throw ParseError(ctx + ".couplings: duplicate pair (" + std::to_string(k) + "," + std::to_string(l) + ")");
      }
      try {
        net.set_coupling(k, l, value);
      } catch (const std::invalid_argument& e) {
        throw ParseError(ctx + ".couplings: " + e.what());
      }
    }
  }
  return net;
}

DensityMatrix parse_state(const json& j, int n, DensityMatrix::Positivity policy) {
  const std::string ctx = "initial_state";
  check_keys(j, {"strings", "dense"}, ctx);
  if (j.contains("strings") == j.contains("dense")) {
    throw ParseError(ctx + ": give exactly one of \"strings\" or \"dense\"");
  }
  Operator rho;
  if (j.contains("strings")) {
    const json& list = j.at("strings");
    if (!list.is_array()) throw ParseError(ctx + ".strings: expected an array");
    PauliCoefficients coeffs;
    for (const json& entry : list) {
      check_keys(entry, {"sites", "coeff"}, ctx + ".strings[]");
      const json& sites = require(entry, "sites", ctx + ".strings[]");
      if (!sites.is_array() || sites.empty()) throw ParseError(ctx + ".strings[].sites: expected a non-empty array");
      std::vector<Site> parsed;
      for (const json& s : sites) {
        if (!s.is_array() || s.size() != 2 || !s[1].is_string() || s[1].get<std::string>().size() != 1) {
          throw ParseError(ctx + ".strings[].sites: entries must be [index, \"x\"|\"y\"|\"z\"]");
        }
        try {
          parsed.push_back({integer(s[0], ctx + ".strings[].sites"), parse_axis(s[1].get<std::string>()[0])});
        } catch (const std::invalid_argument& e) {
          throw ParseError(ctx + ".strings[].sites: " + e.what());
        }
      }
      const double c = number(require(entry, "coeff", ctx + ".strings[]"), ctx + ".strings[].coeff");
      try {
        coeffs[PauliString(n, std::move(parsed))] += c;
      } catch (const std::invalid_argument& e) {
        throw ParseError(ctx + ".strings[]: " + e.what());
      }
    }
    rho = reconstruct(n, coeffs);
    rho.diagonal().array() += 1.0 / static_cast<double>(rho.rows());
  } else {
    const json& rows = j.at("dense");
    const auto dim = static_cast<std::size_t>(1) << n;
    if (!rows.is_array() || rows.size() != dim) {
      throw ParseError(ctx + ".dense: expected " + std::to_string(dim) + " rows");
    }
    rho.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
      if (!rows[r].is_array() || rows[r].size() != dim) {
        throw ParseError(ctx + ".dense: row " + std::to_string(r) + " must have " + std::to_string(dim) + " entries");
      }
      for (std::size_t c = 0; c < dim; ++c) {
        const json& z = rows[r][c];
        if (!z.is_array() || z.size() != 2) throw ParseError(ctx + ".dense: entries must be [re, im]");
        rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            Complex(number(z[0], ctx + ".dense"), number(z[1], ctx + ".dense"));
      }
    }
  }
  try {
    return DensityMatrix(std::move(rho), policy);
  } catch (const std::invalid_argument& e) {
    throw InvalidState(e.what());
  }
}

ModelFile parse_model(const json& j, DensityMatrix::Positivity policy) {
  check_keys(j, {"n", "gamma", "couplings", "initial_state"}, "model");
  ModelFile out{parse_network(j), std::nullopt};
  if (j.contains("initial_state")) out.state = parse_state(j.at("initial_state"), out.net.spins(), policy);
  return out;
}

ModelFile load_model(const std::filesystem::path& path, DensityMatrix::Positivity policy) {
  try {
    return parse_model(read_json(path), policy);
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw ParseError(path.string() + ": " + what);
  }
}

ModelStatePair load_pair(const std::filesystem::path& path, DensityMatrix::Positivity policy) {
  ModelFile m = load_model(path, policy);
  if (!m.state) throw ParseError(path.string() + ": pair file needs an \"initial_state\"");
  return {std::move(m.net), std::move(*m.state)};
}

json network_to_json(const SpinNetwork& net) {
  json cs = json::array();
  for (const auto& [kl, value] : net.couplings()) {
    cs.push_back({{"k", kl.first}, {"l", kl.second}, {"J", round15(value)}});
  }
  return {{"n", net.spins()}, {"gamma", rounded(net.gamma())}, {"couplings", cs}};
}

json state_to_json(const DensityMatrix& rho) {
  json strings = json::array();
  for (const auto& [p, c] : pauli_decompose(rho.matrix(), 1e-15)) {
    if (p.is_identity()) continue;
    json sites = json::array();
    for (const Site& s : p.sites()) sites.push_back({s.index, std::string(1, axis_name(s.axis))});
    strings.push_back({{"sites", sites}, {"coeff", round15(c)}});
  }
  return {{"strings", strings}};
}

json pair_to_json(const ModelStatePair& pair) {
  json j = network_to_json(pair.net);
  j["initial_state"] = state_to_json(pair.rho0);
  return j;
}

ControlSchedule parse_schedule(const json& j) {
  check_keys(j, {"segments"}, "schedule");
  const json& segs = require(j, "segments", "schedule");
  if (!segs.is_array() || segs.empty()) throw ParseError("schedule.segments: expected a non-empty array");
  std::vector<Segment> out;
  for (const json& s : segs) {
    check_keys(s, {"duration", "ux", "uy", "uz"}, "schedule.segments[]");
    Segment seg{number(require(s, "duration", "schedule.segments[]"), "schedule.segments[].duration")};
    if (s.contains("ux")) seg.ux = number(s.at("ux"), "schedule.segments[].ux");
    if (s.contains("uy")) seg.uy = number(s.at("uy"), "schedule.segments[].uy");
    if (s.contains("uz")) seg.uz = number(s.at("uz"), "schedule.segments[].uz");
    out.push_back(seg);
  }
  try {
    return ControlSchedule(std::move(out));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("schedule: ") + e.what());
  }
}

json schedule_to_json(const ControlSchedule& sched) {
  json segs = json::array();
  for (const Segment& s : sched.segments()) {
    segs.push_back({{"duration", round15(s.duration)}, {"ux", round15(s.ux)}, {"uy", round15(s.uy)}, {"uz", round15(s.uz)}});
  }
  return {{"segments", segs}};
}

std::string trace_to_csv(const Trace& trace) {
  std::string out = "t,Mx,My,Mz\n";
  for (std::size_t j = 0; j < trace.size(); ++j) {
    out += format15(trace.t[j]) + ',' + format15(trace.mx[j]) + ',' + format15(trace.my[j]) + ',' +
           format15(trace.mz[j]) + '\n';
  }
  return out;
}

Trace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trace: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,Mx,My,Mz") throw ParseError("trace: header must be t,Mx,My,Mz");
  Trace tr;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[4];
    std::istringstream fields(line);
    std::string cell;
    int count = 0;
    while (std::getline(fields, cell, ',')) {
      if (count >= 4) throw ParseError("trace: line " + std::to_string(row) + " must have 4 fields");
      char* end = nullptr;
      v[count] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0' || !std::isfinite(v[count])) {
        throw ParseError("trace: bad number on line " + std::to_string(row));
      }
      ++count;
    }
    if (count != 4 || line.back() == ',') {
      throw ParseError("trace: line " + std::to_string(row) + " must have 4 fields");
    }
    if (!tr.t.empty() && !(v[0] > tr.t.back())) throw ParseError("trace: times must increase strictly");
    tr.t.push_back(v[0]);
    tr.mx.push_back(v[1]);
    tr.my.push_back(v[2]);
    tr.mz.push_back(v[3]);
  }
  return tr;
}

json report_to_json(const AnalysisReport& r) {
  return {{"n", r.spins},
          {"controllable", r.controllable},
          {"observable", r.observable},
          {"lie_dimension", r.lie_dimension},
          {"observability_dimension", r.observability_dimension},
          {"target_dimension", r.target_dimension},
          {"graph_connected", r.graph_connected},
          {"gamma_distinct", r.gamma_distinct}};
}

json verdict_to_json(const EquivalenceVerdict& v) {
  json j = {{"equivalent", v.equivalent},
            {"trials", v.trials},
            {"tolerance", round15(v.tolerance)},
            {"n_a", v.spins_a},
            {"n_b", v.spins_b}};
  j["max_deviation"] = std::isfinite(v.max_deviation) ? json(round15(v.max_deviation)) : json(nullptr);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

json fit_to_json(const FitResult& r) {
  json flat = json::array();
  for (const Edge& e : r.flat_couplings) flat.push_back({e.first, e.second});
  json j = {{"branch", r.branch},
            {"n", r.estimate.spins},
            {"couplings", couplings_to_json(r.estimate.edges, r.estimate.couplings)},
            {"gamma", rounded(r.estimate.gamma)},
            {"residual", round15(r.residual)},
            {"objective", round15(r.objective)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"start", r.start},
            {"warnings", r.warnings},
            {"flat_couplings", flat}};
  if (r.state.size() > 0) {
    j["initial_state"] = state_to_json(DensityMatrix(r.state, DensityMatrix::Positivity::report));
  }
  return j;
}

DatasetDir load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path hyp_path = dir / "hypothesis.json";
  const json hyp = read_json(hyp_path);
  const std::string ctx = hyp_path.string();
  try {
    check_keys(hyp, {"n", "edges", "grid", "known_state", "state_file", "initial_guess"}, ctx);
    DatasetDir out;
    out.data.spins = integer(require(hyp, "n", ctx), ctx + ": n");
    if (out.data.spins < 1 || out.data.spins > kMaxRealizeSpins) throw ParseError(ctx + ": n out of range");
    out.data.grid = hyp.contains("grid") ? number(hyp.at("grid"), ctx + ": grid") : kDefaultGrid;
    const json& edges = require(hyp, "edges", ctx);
    if (!edges.is_array()) throw ParseError(ctx + ": edges must be an array of [k, l]");
    for (const json& e : edges) {
      if (!e.is_array() || e.size() != 2) throw ParseError(ctx + ": edges must be an array of [k, l]");
      const int k = integer(e[0], ctx + ": edges");
      const int l = integer(e[1], ctx + ": edges");
      out.data.edges.emplace_back(std::min(k, l), std::max(k, l));
    }
    out.known_state = hyp.contains("known_state") && hyp.at("known_state").get<bool>();
    if (out.known_state) {
      const json& file = require(hyp, "state_file", ctx);
      if (!file.is_string()) throw ParseError(ctx + ": state_file must be a string");
      const std::filesystem::path state_path = dir / file.get<std::string>();
      out.state = parse_state(read_json(state_path), out.data.spins);
    }
    if (hyp.contains("initial_guess")) {
      const json& g = hyp.at("initial_guess");
      check_keys(g, {"gamma", "couplings"}, ctx + ": initial_guess");
      json model = g;
      model["n"] = out.data.spins;
      out.initial_guess = ParameterVector::from_network(parse_network(model), out.data.edges);
    }
    for (int i = 0;; ++i) {
      const auto sched_path = dir / ("schedule_" + std::to_string(i) + ".json");
      const auto trace_path = dir / ("trace_" + std::to_string(i) + ".csv");
      if (!std::filesystem::exists(sched_path)) {
        if (std::filesystem::exists(trace_path)) throw ParseError(sched_path.string() + ": missing");
        break;
      }
      if (!std::filesystem::exists(trace_path)) throw ParseError(trace_path.string() + ": missing");
      Record rec;
      try {
        rec.schedule = parse_schedule(read_json(sched_path));
      } catch (const ParseError& e) {
        throw ParseError(sched_path.string() + ": " + e.what());
      }
      try {
        rec.trace = parse_trace_csv(read_file(trace_path));
      } catch (const ParseError& e) {
        throw ParseError(trace_path.string() + ": " + e.what());
      }
      out.data.records.push_back(std::move(rec));
    }
    if (out.data.records.empty()) throw ParseError(dir.string() + ": no schedule_0.json / trace_0.csv records");
    try {
      out.data.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(dir.string() + ": " + e.what());
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data, const DensityMatrix* known_state) {
  std::filesystem::create_directories(dir);
  json edges = json::array();
  for (const Edge& e : data.edges) edges.push_back({e.first, e.second});
  json hyp = {{"n", data.spins}, {"edges", edges}, {"grid", round15(data.grid)}, {"known_state", known_state != nullptr}};
  if (known_state) {
    hyp["state_file"] = "state.json";
    write_file_atomic(dir / "state.json", state_to_json(*known_state).dump(2) + "\n");
  }
  write_file_atomic(dir / "hypothesis.json", hyp.dump(2) + "\n");
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    write_file_atomic(dir / ("schedule_" + std::to_string(i) + ".json"),
                      schedule_to_json(data.records[i].schedule).dump(2) + "\n");
    write_file_atomic(dir / ("trace_" + std::to_string(i) + ".csv"), trace_to_csv(data.records[i].trace));
  }
}

}  // namespace spinid::io
