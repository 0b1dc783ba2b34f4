#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "conslaw/conslaw.h"

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "conslaw-report/1";

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MathFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(conslaw_status s) {
  if (s == CONSLAW_OK) return;
  const std::string msg = conslaw_last_error();
  if (s == CONSLAW_MATH_FAILURE || s == CONSLAW_INTERNAL_ERROR) throw MathFailure(msg);
  throw InputError(msg);
}

struct Result {
  conslaw_result* r = nullptr;
  ~Result() { conslaw_result_free(r); }
  Json json() const { return Json::parse(conslaw_result_json(r)); }
};

struct Equation {
  conslaw_equation* e = nullptr;
  Equation() = default;
  Equation(const Equation&) = delete;
  Equation& operator=(const Equation&) = delete;
  Equation(Equation&& o) noexcept : e(o.e) { o.e = nullptr; }
  ~Equation() { conslaw_equation_free(e); }
};

struct System {
  conslaw_system* s = nullptr;
  System() = default;
  System(const System&) = delete;
  System& operator=(const System&) = delete;
  System(System&& o) noexcept : s(o.s) { o.s = nullptr; }
  System& operator=(System&& o) noexcept {
    std::swap(s, o.s);
    return *this;
  }
  ~System() { conslaw_system_free(s); }
};

// Keeps strings alive for the duration of a C call.
struct CStrings {
  std::vector<std::string> store;
  std::vector<const char*> ptrs;
  explicit CStrings(std::vector<std::string> xs) : store(std::move(xs)) {
    for (const auto& s : store) ptrs.push_back(s.c_str());
  }
  const char* const* data() const { return ptrs.empty() ? nullptr : ptrs.data(); }
  std::size_t size() const { return ptrs.size(); }
};

const Json& field(const Json& j, const char* key, Json::value_t type) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  const Json& v = j.at(key);
  if (v.type() != type) throw InputError(std::string("field '") + key + "' has the wrong type");
  return v;
}

std::string text(const Json& j, const char* key) { return field(j, key, Json::value_t::string).get<std::string>(); }

std::string text_or(const Json& j, const char* key, const std::string& fallback) {
  return j.is_object() && j.contains(key) ? text(j, key) : fallback;
}

const Json& array_or_empty(const Json& j, const char* key) {
  static const Json empty = Json::array();
  if (!j.is_object() || !j.contains(key)) return empty;
  return field(j, key, Json::value_t::array);
}

Equation load_equation(const Json& job) {
  const Json& eq = field(job, "equation", Json::value_t::object);
  const std::string rel = text_or(eq, "relation", "concrete");
  std::vector<std::string> consts;
  for (const auto& c : array_or_empty(eq, "constants")) {
    if (!c.is_string()) throw InputError("constants must be strings");
    consts.push_back(c.get<std::string>());
  }
  CStrings cs(consts);
  const std::string A = rel == "concrete" ? text(eq, "A") : "";
  const std::string B = rel == "concrete" ? text(eq, "B") : "";
  Equation out;
  check(conslaw_equation_new(rel.c_str(), rel == "concrete" ? A.c_str() : nullptr,
                             rel == "concrete" ? B.c_str() : nullptr, cs.data(), cs.size(), &out.e));
  return out;
}

struct Vectors {
  std::vector<std::string> F, G, names, labels;
};

Vectors vectors(const Json& arr) {
  Vectors v;
  for (const auto& item : arr) {
    v.F.push_back(text(item, "F"));
    v.G.push_back(text(item, "G"));
    v.names.push_back(text_or(item, "name", ""));
    v.labels.push_back(text_or(item, "label", ""));
  }
  return v;
}

System add_potentials(const System& base, const Vectors& v) {
  System out;
  CStrings F(v.F), G(v.G), N(v.names);
  const bool named = std::all_of(v.names.begin(), v.names.end(), [](const std::string& s) { return !s.empty(); });
  check(conslaw_system_add_potentials(base.s, F.data(), G.data(), named ? N.data() : nullptr, F.size(), &out.s));
  return out;
}

// Base system of the job with the potentials listed under args.potentials.
System load_system(const Equation& eq, const Json& args) {
  System base;
  check(conslaw_system_new(eq.e, &base.s));
  const Vectors pots = vectors(array_or_empty(args, "potentials"));
  if (pots.F.empty()) return base;
  return add_potentials(base, pots);
}

std::uint64_t seed() {
  const char* s = std::getenv("CONSLAW_SEED");
  if (!s || !*s) return 1;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw InputError("CONSLAW_SEED must be a nonnegative integer");
  }
}

struct Outcome {
  Json results;
  bool ok = true;
  std::vector<std::string> human;
};

Outcome run_verify(const Json& job) {
  const Json args = job.value("args", Json::object());
  Equation eq = load_equation(job);
  System sys = load_system(eq, args);
  const Vectors v = vectors(field(args, "vectors", Json::value_t::array));
  Outcome o;
  o.results = Json::array();
  for (std::size_t i = 0; i < v.F.size(); ++i) {
    Result r;
    check(conslaw_verify(sys.s, v.F[i].c_str(), v.G[i].c_str(), seed(), &r.r));
    Json j{{"label", v.labels[i]}, {"F", v.F[i]}, {"G", v.G[i]}};
    const Json rj = r.json();
    for (const auto& [k, val] : rj.items()) j[k] = val;
    const bool holds = j["holds"].get<bool>();
    o.ok = o.ok && holds;
    o.human.push_back((holds ? "holds  " : "FAILS  ") + v.labels[i] + " F=" + v.F[i] + " G=" + v.G[i] +
                      (holds ? (j["trivial"].get<bool>() ? "  (trivial)" : "") : "  residual " +
                                                                               j["residual"].get<std::string>()));
    o.results.push_back(j);
  }
  return o;
}

Outcome run_characteristics(const Json& job) {
  const Json args = job.value("args", Json::object());
  Equation eq = load_equation(job);
  System sys = load_system(eq, Json::object());
  const Vectors v = vectors(field(args, "vectors", Json::value_t::array));
  Outcome o;
  o.results = Json::array();
  for (std::size_t i = 0; i < v.F.size(); ++i) {
    Result r;
    check(conslaw_characteristic(sys.s, v.F[i].c_str(), v.G[i].c_str(), &r.r));
    Json j{{"label", v.labels[i]}, {"F", v.F[i]}, {"G", v.G[i]}};
    const Json rj = r.json();
    for (const auto& [k, val] : rj.items()) j[k] = val;
    const bool holds = j["adjoint_holds"].get<bool>();
    o.ok = o.ok && holds;
    o.human.push_back("lambda = " + j["characteristic"].get<std::string>() +
                      (holds ? "  adjoint condition holds" : "  adjoint condition FAILS"));
    o.results.push_back(j);
  }
  return o;
}

Outcome run_classify(const Json& job) {
  Equation eq = load_equation(job);
  Result r;
  check(conslaw_classify(eq.e, &r.r));
  Outcome o;
  o.results = r.json();
  const std::string tag = o.results["tag"].get<std::string>();
  static const std::set<std::string> series{"A=u^-2,B=0", "A=B=u^-2", "A=1,B=2u"};
  o.results["note"] = series.count(tag) ? "admits an infinite series of simplest potential conservation laws" : "";
  o.human.push_back("case " + std::to_string(o.results["case"].get<int>()) + ", canonical form " + tag);
  for (const auto& b : o.results["basis"])
    o.human.push_back("  F=" + b["F"].get<std::string>() + "  G=" + b["G"].get<std::string>());
  if (!o.results["family"].is_null())
    o.human.push_back("  family F=" + o.results["family"]["F"].get<std::string>());
  if (!o.results["note"].get<std::string>().empty()) o.human.push_back("  note: " + o.results["note"].get<std::string>());
  return o;
}

Outcome run_potentials(const Json& job) {
  const Json args = job.value("args", Json::object());
  Equation eq = load_equation(job);
  System base = load_system(eq, args);
  const Vectors v = vectors(field(args, "vectors", Json::value_t::array));
  Outcome o;
  System ps;
  try {
    ps = add_potentials(base, v);
  } catch (const MathFailure& e) {
    o.ok = false;
    o.results = Json{{"built", false}, {"error", e.what()}};
    o.human.push_back(std::string("rejected: ") + e.what());
    return o;
  }
  Result d, dep;
  check(conslaw_system_describe(ps.s, &d.r));
  check(conslaw_potentials_dependent(ps.s, v.F.size(), &dep.r));
  o.results = Json{{"built", true}, {"system", d.json()}, {"dependence", dep.json()}};
  for (const auto& rel : o.results["system"]["relations"]) o.human.push_back(rel.get<std::string>());
  o.human.push_back(o.results["dependence"]["dependent"].get<bool>() ? "potentials are locally dependent"
                                                                     : "potentials are independent");
  return o;
}

Outcome run_iterate(const Json& job, int max_level, int max_potentials) {
  const Json args = job.value("args", Json::object());
  if (max_level <= 0) max_level = args.value("max_level", 3);
  if (max_potentials <= 0) max_potentials = args.value("max_potentials", 2);
  Equation eq = load_equation(job);
  Result r;
  check(conslaw_iterate(eq.e, max_level, max_potentials, &r.r));
  Outcome o;
  o.results = r.json();
  o.human.push_back(o.results["tag"].get<std::string>() + ": " + o.results["summary"].get<std::string>());
  for (const auto& n : o.results["nodes"]) {
    o.human.push_back("  level " + std::to_string(n["level"].get<int>()) + ", " + n["label"].get<std::string>());
    for (const auto& l : n["laws"])
      o.human.push_back("    " + l["verdict"].get<std::string>() + ": F=" + l["F"].get<std::string>() +
                        "  G=" + l["G"].get<std::string>());
  }
  o.human.push_back("  stopped: " + o.results["termination"].get<std::string>());
  return o;
}

Outcome run_transform(const Json& job) {
  const Json args = job.value("args", Json::object());
  Equation eq = load_equation(job);
  System sys = load_system(eq, args);
  std::vector<std::string> pn, pi, ik, iv;
  for (const auto& [k, val] : field(args, "images", Json::value_t::object).items()) {
    pn.push_back(k);
    pi.push_back(val.get<std::string>());
  }
  for (const auto& [k, val] : field(args, "inverse", Json::value_t::object).items()) {
    ik.push_back(k);
    iv.push_back(val.get<std::string>());
  }
  const Vectors v = vectors(array_or_empty(args, "vectors"));
  CStrings PN(pn), PI(pi), IK(ik), IV(iv), F(v.F), G(v.G);
  const std::string x = text(args, "x");
  const std::string u = text(args, "u");
  Result r;
  check(conslaw_transform(sys.s, x.c_str(), u.c_str(), PN.data(), PI.data(), PN.size(), IK.data(), IV.data(),
                          IK.size(), F.data(), G.data(), F.size(), &r.r));
  Outcome o;
  o.results = r.json();
  o.human.push_back(o.results["system"]["rhs"].get<std::string>());
  for (const auto& rel : o.results["system"]["relations"]) o.human.push_back(rel.get<std::string>());
  for (const auto& m : o.results["transported"]) {
    const bool holds = m["holds"].get<bool>();
    o.ok = o.ok && holds;
    o.human.push_back(std::string(holds ? "holds  " : "FAILS  ") + "F=" + m["F"].get<std::string>() +
                      "  G=" + m["G"].get<std::string>());
  }
  if (args.contains("target")) {
    Json target_job{{"equation", field(args, "target", Json::value_t::object).value("equation", Json::object())}};
    Equation teq = load_equation(target_job);
    System tsys = load_system(teq, args["target"]);
    Result d;
    check(conslaw_system_describe(tsys.s, &d.r));
    const bool same = d.json() == o.results["system"];
    o.results["matches_target"] = same;
    o.ok = o.ok && same;
    o.human.push_back(same ? "matches the target system" : "DIFFERS from the target system");
  }
  return o;
}

Outcome run_table1() {
  Result r;
  check(conslaw_table1(&r.r));
  Outcome o;
  o.results = r.json();
  for (const auto& row : o.results) {
    const bool holds = row["holds"].get<bool>();
    o.ok = o.ok && holds;
    o.human.push_back(row["label"].get<std::string>() + "\tA=" + row["A"].get<std::string>() +
                      "\tB=" + row["B"].get<std::string>() + "\tF=" + row["F"].get<std::string>() +
                      "\tG=" + row["G"].get<std::string>() + (holds ? "\tholds" : "\tFAILS"));
  }
  return o;
}

Outcome run_collapse(const Json& job) {
  const Json args = job.value("args", Json::object());
  const std::string kase = text(args, "case");
  Result r;
  check(conslaw_collapse(kase.c_str(), &r.r));
  Outcome o;
  o.results = r.json();
  o.ok = o.results["verified"].get<bool>();
  for (const auto& w : o.results["witnesses"])
    o.human.push_back(w["law"].get<std::string>() + ": w = " + w["w"].get<std::string>() +
                      (w["matches"].get<bool>() && w["trivial"].get<bool>() ? "  verified" : "  FAILS"));
  return o;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conservation laws of diffusion-convection equations"};
  std::string command;
  std::string job_path;
  std::string json_path;
  std::string report_path;
  int max_level = 0;
  int max_potentials = 0;
  app.add_option("command", command,
                 "verify | characteristics | classify | potentials | iterate | transform | table1 | collapse | render")
      ->required();
  app.add_option("--job", job_path, "job file (JSON)");
  app.add_option("--json", json_path, "write the JSON report here");
  app.add_option("--report", report_path, "report to re-render (render command)");
  app.add_option("--max-level", max_level, "deepest potential level for iterate");
  app.add_option("--max-potentials", max_potentials, "largest set of laws turned into potentials at once");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (command == "render") {
      if (report_path.empty()) throw InputError("render needs --report");
      const Json report = read_json(report_path);
      if (!json_path.empty()) write_json(json_path, report);
      else std::cout << report.dump(2) << "\n";
      return 0;
    }
    Json job = Json::object();
    if (!job_path.empty()) job = read_json(job_path);
    else if (command != "table1") throw InputError("--job is required for " + command);
    if (!job.is_object()) throw InputError("job must be a JSON object");
    const std::string declared = text_or(job, "command", command);
    if (declared != command) throw InputError("job declares command '" + declared + "', invoked as '" + command + "'");

    Outcome o;
    if (command == "verify") o = run_verify(job);
    else if (command == "characteristics") o = run_characteristics(job);
    else if (command == "classify") o = run_classify(job);
    else if (command == "potentials") o = run_potentials(job);
    else if (command == "iterate") o = run_iterate(job, max_level, max_potentials);
    else if (command == "transform") o = run_transform(job);
    else if (command == "table1") o = run_table1();
    else if (command == "collapse") o = run_collapse(job);
    else throw InputError("unknown command '" + command + "'");

    for (const auto& line : o.human) std::cout << line << "\n";
    const Json report{{"schema", kSchema},
                      {"version", conslaw_version()},
                      {"command", command},
                      {"job", job},
                      {"status", o.ok ? "ok" : "failed"},
                      {"results", o.results}};
    std::string out = json_path;
    if (out.empty() && job.contains("output") && job["output"].is_object()) out = text_or(job["output"], "json", "");
    if (!out.empty()) write_json(out, report);
    return o.ok ? 0 : 1;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const MathFailure& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
}
