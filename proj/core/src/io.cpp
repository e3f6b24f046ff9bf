#include "ddopt/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ddopt/errors.hpp"

namespace ddopt {
namespace io {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json matrix_json(const std::vector<std::vector<std::int64_t>>& m) {
  ordered_json out = ordered_json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

std::vector<std::vector<std::int64_t>> matrix_from(const nlohmann::json& j) {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& row : j) {
    out.push_back(row.get<std::vector<std::int64_t>>());
  }
  return out;
}

nlohmann::json parse(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(std::string("missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error("read failure on '" + path + "'");
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write failure on '" + path + "'");
}

std::string to_json(const bilevel::CpspInstance& inst) {
  ordered_json j;
  j["type"] = "cpsp";
  j["n"] = inst.n;
  j["seed"] = inst.seed;
  j["tightness"] = inst.tightness;
  j["weight_range"] = bilevel::to_string(inst.dist);
  j["leader_deadline_policy"] = bilevel::to_string(inst.dl_policy);
  j["c_leader"] = inst.c_leader;
  j["d_leader"] = inst.d_leader;
  j["c_follower"] = inst.c_follower;
  j["a_leader"] = inst.a_leader;
  j["a_follower"] = inst.a_follower;
  j["b_leader"] = inst.b_leader;
  j["b_follower"] = inst.b_follower;
  return j.dump(2) + "\n";
}

bilevel::CpspInstance cpsp_from_json(const std::string& text) {
  nlohmann::json j = parse(text);
  if (field<std::string>(j, "type") != "cpsp") {
    throw ParseError("expected an instance of type 'cpsp'");
  }
  bilevel::CpspInstance inst;
  inst.n = field<int>(j, "n");
  inst.seed = field<std::uint64_t>(j, "seed");
  inst.tightness = field<double>(j, "tightness");
  inst.dist =
      bilevel::coeff_dist_from_string(field<std::string>(j, "weight_range"));
  inst.dl_policy =
      bilevel::dl_policy_from_string(field<std::string>(j, "leader_deadline_policy"));
  inst.c_leader = field<std::vector<std::int64_t>>(j, "c_leader");
  inst.d_leader = field<std::vector<std::int64_t>>(j, "d_leader");
  inst.c_follower = field<std::vector<std::int64_t>>(j, "c_follower");
  inst.a_leader = field<std::vector<std::int64_t>>(j, "a_leader");
  inst.a_follower = field<std::vector<std::int64_t>>(j, "a_follower");
  inst.b_leader = field<std::int64_t>(j, "b_leader");
  inst.b_follower = field<std::int64_t>(j, "b_follower");
  std::size_t n = static_cast<std::size_t>(inst.n);
  if (inst.n <= 0 || inst.c_leader.size() != n || inst.d_leader.size() != n ||
      inst.c_follower.size() != n || inst.a_leader.size() != n ||
      inst.a_follower.size() != n) {
    throw ParseError("instance arrays must all have n entries");
  }
  return inst;
}

std::string to_json(const robust::RtsptwInstance& inst) {
  ordered_json j;
  j["type"] = "rtsptw";
  j["n"] = inst.n;
  j["seed"] = inst.seed;
  j["window_width"] = inst.window_width;
  j["budget"] = inst.budget;
  j["semantics"] =
      inst.semantics == robust::RtsptwInstance::Semantics::Arrival
          ? "arrival"
          : "completion";
  ordered_json points = ordered_json::array();
  for (const auto& p : inst.points) {
    points.push_back(ordered_json::array({p[0], p[1]}));
  }
  j["points"] = points;
  j["cost"] = matrix_json(inst.cost);
  j["travel"] = matrix_json(inst.travel);
  j["release"] = inst.release;
  ordered_json deadlines = ordered_json::array();
  for (double d : inst.deadline) {
    if (std::isfinite(d)) {
      deadlines.push_back(d);
    } else {
      deadlines.push_back(nullptr);
    }
  }
  j["deadline"] = deadlines;
  j["delay_lb"] = inst.delay_lb;
  j["delay_ub"] = inst.delay_ub;
  return j.dump(2) + "\n";
}

robust::RtsptwInstance rtsptw_from_json(const std::string& text) {
  nlohmann::json j = parse(text);
  if (field<std::string>(j, "type") != "rtsptw") {
    throw ParseError("expected an instance of type 'rtsptw'");
  }
  robust::RtsptwInstance inst;
  inst.n = field<int>(j, "n");
  inst.seed = field<std::uint64_t>(j, "seed");
  inst.window_width = field<std::int64_t>(j, "window_width");
  inst.budget = field<std::int64_t>(j, "budget");
  std::string sem = field<std::string>(j, "semantics");
  if (sem == "arrival") {
    inst.semantics = robust::RtsptwInstance::Semantics::Arrival;
  } else if (sem == "completion") {
    inst.semantics = robust::RtsptwInstance::Semantics::Completion;
  } else {
    throw ParseError("semantics must be 'arrival' or 'completion'");
  }
  if (!j.contains("points")) throw ParseError("missing field 'points'");
  for (const auto& p : j["points"]) {
    if (!p.is_array() || p.size() != 2) {
      throw ParseError("each point needs exactly two coordinates");
    }
    inst.points.push_back({p[0].get<std::int64_t>(), p[1].get<std::int64_t>()});
  }
  if (!j.contains("cost") || !j.contains("travel")) {
    throw ParseError("missing edge matrices");
  }
  inst.cost = matrix_from(j["cost"]);
  inst.travel = matrix_from(j["travel"]);
  inst.release = field<std::vector<std::int64_t>>(j, "release");
  if (!j.contains("deadline")) throw ParseError("missing field 'deadline'");
  for (const auto& d : j["deadline"]) {
    if (d.is_null()) {
      inst.deadline.push_back(std::numeric_limits<double>::infinity());
    } else {
      inst.deadline.push_back(d.get<double>());
    }
  }
  inst.delay_lb = field<std::vector<std::int64_t>>(j, "delay_lb");
  inst.delay_ub = field<std::vector<std::int64_t>>(j, "delay_ub");
  try {
    inst.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("invalid instance: ") + e.what());
  }
  return inst;
}

std::string instance_type(const std::string& text) {
  nlohmann::json j = parse(text);
  return field<std::string>(j, "type");
}

std::string iteration_log_csv(const std::vector<robust::IterationRecord>& log) {
  std::string out = "iteration,objective,scenarios,labels,seconds\n";
  char buf[160];
  for (const auto& rec : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%llu,%.6f\n", rec.iteration,
                  rec.objective, rec.num_scenarios,
                  static_cast<unsigned long long>(rec.labels), rec.seconds);
    out += buf;
  }
  return out;
}

}  // namespace io
}  // namespace ddopt
