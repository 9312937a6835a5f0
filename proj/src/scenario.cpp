#include "probe_mpc/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "probe_mpc/geometry.hpp"

namespace probe_mpc {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kProbing: return "probing";
    case Variant::kNoProbing: return "no_probing";
    case Variant::kConservative: return "conservative";
  }
  return "unknown";
}

Variant variant_from_name(const std::string& name) {
  if (name == "probing") return Variant::kProbing;
  if (name == "no_probing") return Variant::kNoProbing;
  if (name == "conservative") return Variant::kConservative;
  throw std::invalid_argument("unknown variant: " + name);
}

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
  bool consumed = false;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& source, int line,
                       const std::string& message) {
  std::ostringstream out;
  out << source << ":" << line << ": " << message;
  throw ConfigError(out.str());
}

std::vector<Section> tokenize(const std::string& text,
                              const std::string& source) {
  std::vector<Section> sections;
  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(source, line_no, "unterminated section");
      Section section;
      section.name = trim(line.substr(1, line.size() - 2));
      section.line = line_no;
      sections.push_back(std::move(section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(source, line_no, "expected key = value");
    if (sections.empty()) fail(source, line_no, "key outside any section");
    Entry entry;
    entry.key = trim(line.substr(0, eq));
    entry.value = trim(line.substr(eq + 1));
    entry.line = line_no;
    if (entry.key.empty()) fail(source, line_no, "empty key");
    sections.back().entries.push_back(std::move(entry));
  }
  return sections;
}

class SectionReader {
 public:
  SectionReader(Section& section, const std::string& source)
      : section_(section), source_(source) {}

  Entry* find(const std::string& key) {
    for (Entry& e : section_.entries) {
      if (e.key == key) {
        e.consumed = true;
        return &e;
      }
    }
    return nullptr;
  }

  bool get_double(const std::string& key, double* out) {
    Entry* e = find(key);
    if (e == nullptr) return false;
    *out = parse_double(*e);
    return true;
  }

  bool get_int(const std::string& key, int* out) {
    Entry* e = find(key);
    if (e == nullptr) return false;
    try {
      std::size_t used = 0;
      *out = std::stoi(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail(source_, e->line, "invalid integer for '" + key + "'");
    }
    return true;
  }

  bool get_uint64(const std::string& key, std::uint64_t* out) {
    Entry* e = find(key);
    if (e == nullptr) return false;
    try {
      std::size_t used = 0;
      *out = std::stoull(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail(source_, e->line, "invalid unsigned integer for '" + key + "'");
    }
    return true;
  }

  bool get_string(const std::string& key, std::string* out) {
    Entry* e = find(key);
    if (e == nullptr) return false;
    *out = e->value;
    return true;
  }

  bool get_doubles(const std::string& key, std::vector<double>* out) {
    Entry* e = find(key);
    if (e == nullptr) return false;
    *out = parse_double_list(*e);
    return true;
  }

  bool get_fixed(const std::string& key, std::size_t count, double* out) {
    Entry* e = find(key);
    if (e == nullptr) return false;
    const std::vector<double> values = parse_double_list(*e);
    if (values.size() != count) {
      fail(source_, e->line,
           "'" + key + "' expects " + std::to_string(count) + " numbers");
    }
    std::copy(values.begin(), values.end(), out);
    return true;
  }

  bool get_ints(const std::string& key, std::vector<int>* out) {
    Entry* e = find(key);
    if (e == nullptr) return false;
    out->clear();
    std::istringstream s(e->value);
    std::string token;
    while (s >> token) {
      try {
        std::size_t used = 0;
        out->push_back(std::stoi(token, &used));
        if (used != token.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail(source_, e->line, "invalid integer list for '" + key + "'");
      }
    }
    if (out->empty()) fail(source_, e->line, "empty list for '" + key + "'");
    return true;
  }

  void finish() const {
    for (const Entry& e : section_.entries) {
      if (!e.consumed) {
        fail(source_, e.line,
             "unknown key '" + e.key + "' in section [" + section_.name + "]");
      }
    }
  }

 private:
  double parse_double(const Entry& e) {
    try {
      std::size_t used = 0;
      const double v = std::stod(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail(source_, e.line, "invalid number for '" + e.key + "'");
    }
  }

  std::vector<double> parse_double_list(const Entry& e) {
    std::vector<double> values;
    std::istringstream s(e.value);
    std::string token;
    while (s >> token) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail(source_, e.line, "invalid number list for '" + e.key + "'");
      }
    }
    return values;
  }

  Section& section_;
  const std::string& source_;
};

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text,
                            const std::string& source_name) {
  std::vector<Section> sections = tokenize(text, source_name);
  ScenarioConfig config;
  bool saw_sim = false, saw_ego = false, saw_weights = false,
       saw_predictor = false, saw_planner = false;

  for (Section& section : sections) {
    SectionReader reader(section, source_name);
    if (section.name == "sim") {
      if (saw_sim) fail(source_name, section.line, "duplicate [sim] section");
      saw_sim = true;
      std::string type;
      if (reader.get_string("type", &type)) {
        if (type == "merge") {
          config.sim.type = ScenarioType::kMerge;
        } else if (type == "cross") {
          config.sim.type = ScenarioType::kCross;
        } else {
          fail(source_name, section.line, "sim.type must be merge or cross");
        }
      }
      reader.get_double("episode_length", &config.sim.episode_length);
      reader.get_double("dt", &config.sim.dt);
      reader.get_uint64("seed", &config.sim.seed);
      reader.get_double("success_x", &config.sim.success_x);
      reader.get_double("footprint_length", &config.sim.footprint_length);
      reader.get_double("footprint_width", &config.sim.footprint_width);
    } else if (section.name == "lane" || section.name == "connector") {
      Lane lane;
      double start[2], end[2];
      std::vector<double> points;
      const bool has_start = reader.get_fixed("start", 2, start);
      const bool has_end = reader.get_fixed("end", 2, end);
      const bool has_points = reader.get_doubles("points", &points);
      if (has_points) {
        if (points.size() < 4 || points.size() % 2 != 0) {
          fail(source_name, section.line,
               "points needs an even count of >= 4 numbers");
        }
        for (std::size_t i = 0; i < points.size(); i += 2) {
          lane.centerline.emplace_back(points[i], points[i + 1]);
        }
      } else if (has_start && has_end) {
        lane.centerline.emplace_back(start[0], start[1]);
        lane.centerline.emplace_back(end[0], end[1]);
      } else {
        fail(source_name, section.line,
             "lane needs either start/end or points");
      }
      reader.get_double("width", &lane.width);
      if (section.name == "lane") {
        config.lane_map.lanes.push_back(std::move(lane));
      } else {
        config.lane_map.connectors.push_back(std::move(lane));
      }
    } else if (section.name == "ego") {
      if (saw_ego) fail(source_name, section.line, "duplicate [ego] section");
      saw_ego = true;
      double spawn[4];
      if (reader.get_fixed("spawn", 4, spawn)) {
        config.ego_spawn = {spawn[0], spawn[1], spawn[2], spawn[3]};
      }
      int lane = 0;
      if (reader.get_int("target_lane", &lane)) {
        config.ego_target_lane = static_cast<std::size_t>(lane);
      }
      reader.get_double("target_speed", &config.ego_target_speed);
    } else if (section.name == "agent") {
      AgentSpec agent;
      double spawn[4];
      if (reader.get_fixed("spawn", 4, spawn)) {
        agent.spawn = {spawn[0], spawn[1], spawn[2], spawn[3]};
      }
      double phi[3];
      if (reader.get_fixed("phi", 3, phi)) {
        agent.phi = Eigen::Vector3d(phi[0], phi[1], phi[2]);
      }
      reader.get_double("target_speed", &agent.target_speed);
      reader.get_ints("route", &agent.route);
      double switch_time = 0.0;
      if (reader.get_double("switch_time", &switch_time)) {
        agent.switch_time = switch_time;
      }
      double switch_phi[3];
      if (reader.get_fixed("switch_phi", 3, switch_phi)) {
        agent.switch_phi =
            Eigen::Vector3d(switch_phi[0], switch_phi[1], switch_phi[2]);
      }
      config.agents.push_back(std::move(agent));
    } else if (section.name == "weights") {
      if (saw_weights) {
        fail(source_name, section.line, "duplicate [weights] section");
      }
      saw_weights = true;
      reader.get_double("alpha1", &config.weights.alpha1);
      reader.get_double("alpha2", &config.weights.alpha2);
      reader.get_double("alpha3", &config.weights.alpha3);
      double q[4];
      if (reader.get_fixed("Q", 4, q)) {
        config.weights.Q = Eigen::Vector4d(q[0], q[1], q[2], q[3]).asDiagonal();
      }
      double r[2];
      if (reader.get_fixed("R", 2, r)) {
        config.weights.R = Eigen::Vector2d(r[0], r[1]).asDiagonal();
      }
      reader.get_double("L", &config.weights.safe_distance);
      reader.get_double("beta", &config.weights.beta);
      reader.get_double("alpha_risk", &config.weights.alpha_risk);
      reader.get_double("tau", &config.weights.tau);
    } else if (section.name == "predictor") {
      if (saw_predictor) {
        fail(source_name, section.line, "duplicate [predictor] section");
      }
      saw_predictor = true;
      reader.get_double("cov0", &config.predictor.cov0);
      reader.get_double("cov_growth", &config.predictor.cov_growth);
      reader.get_double("sigma_obs", &config.predictor.sigma_obs);
      reader.get_int("history_window", &config.predictor.history_window);
      reader.get_double("sigma0", &config.predictor.sigma0);
      reader.get_double("sigma_rate", &config.predictor.sigma_rate);
      reader.get_double("brake_decel", &config.predictor.brake_decel);
      reader.get_double("drift_threshold", &config.predictor.drift_threshold);
      reader.get_double("lateral_gain", &config.predictor.lateral_gain);
      reader.get_double("lateral_vmax", &config.predictor.lateral_vmax);
      reader.get_double("offlane_factor", &config.predictor.offlane_factor);
      reader.get_double("adjacent_gap", &config.predictor.adjacent_gap);
    } else if (section.name == "planner") {
      if (saw_planner) {
        fail(source_name, section.line, "duplicate [planner] section");
      }
      saw_planner = true;
      reader.get_int("horizon", &config.planner.horizon);
      reader.get_int("max_iterations", &config.planner.max_iterations);
      reader.get_double("convergence_tol", &config.planner.convergence_tol);
      reader.get_double("fd_step", &config.planner.fd_step);
      reader.get_double("initial_step", &config.planner.initial_step);
      reader.get_double("min_step", &config.planner.min_step);
      reader.get_double("d_sat", &config.planner.d_sat);
      reader.get_double("ref_lateral_gain", &config.planner.ref_lateral_gain);
      reader.get_double("ref_lateral_vmax", &config.planner.ref_lateral_vmax);
      reader.get_int("particles", &config.belief_particles);
      double prior[3];
      if (reader.get_fixed("belief_prior", 3, prior)) {
        config.belief_prior_mean =
            Eigen::Vector3d(prior[0], prior[1], prior[2]);
      }
      reader.get_double("belief_prior_var", &config.belief_prior_var);
      reader.get_int("lookahead", &config.assimilation.lookahead);
      reader.get_double("ess_ratio", &config.assimilation.ess_ratio);
      reader.get_double("jitter_var", &config.assimilation.jitter_var);
      reader.get_double("a_min", &config.limits.input.a_min);
      reader.get_double("a_max", &config.limits.input.a_max);
      reader.get_double("omega_min", &config.limits.input.omega_min);
      reader.get_double("omega_max", &config.limits.input.omega_max);
      reader.get_double("v_max", &config.limits.v_max);
    } else {
      fail(source_name, section.line, "unknown section [" + section.name + "]");
    }
    reader.finish();
  }
  config.planner.dt = config.sim.dt;

  config.validate();
  return config;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str(), path);
}

std::string write_config(const ScenarioConfig& c) {
  std::ostringstream out;
  const auto d = format_double;
  out << "[sim]\n";
  out << "type = " << (c.sim.type == ScenarioType::kMerge ? "merge" : "cross")
      << "\n";
  out << "episode_length = " << d(c.sim.episode_length) << "\n";
  out << "dt = " << d(c.sim.dt) << "\n";
  out << "seed = " << c.sim.seed << "\n";
  out << "success_x = " << d(c.sim.success_x) << "\n";
  out << "footprint_length = " << d(c.sim.footprint_length) << "\n";
  out << "footprint_width = " << d(c.sim.footprint_width) << "\n";
  auto write_lane = [&](const Lane& lane, const char* name) {
    out << "\n[" << name << "]\n";
    out << "points =";
    for (const auto& p : lane.centerline) {
      out << " " << d(p.x()) << " " << d(p.y());
    }
    out << "\n";
    out << "width = " << d(lane.width) << "\n";
  };
  for (const Lane& lane : c.lane_map.lanes) write_lane(lane, "lane");
  for (const Lane& lane : c.lane_map.connectors) write_lane(lane, "connector");
  out << "\n[ego]\n";
  out << "spawn = " << d(c.ego_spawn.x) << " " << d(c.ego_spawn.y) << " "
      << d(c.ego_spawn.theta) << " " << d(c.ego_spawn.v) << "\n";
  out << "target_lane = " << c.ego_target_lane << "\n";
  out << "target_speed = " << d(c.ego_target_speed) << "\n";
  for (const AgentSpec& a : c.agents) {
    out << "\n[agent]\n";
    out << "spawn = " << d(a.spawn.x) << " " << d(a.spawn.y) << " "
        << d(a.spawn.theta) << " " << d(a.spawn.v) << "\n";
    out << "phi = " << d(a.phi(0)) << " " << d(a.phi(1)) << " " << d(a.phi(2))
        << "\n";
    out << "target_speed = " << d(a.target_speed) << "\n";
    out << "route =";
    for (int idx : a.route) out << " " << idx;
    out << "\n";
    if (a.switch_time) {
      out << "switch_time = " << d(*a.switch_time) << "\n";
    }
    if (a.switch_phi) {
      out << "switch_phi = " << d((*a.switch_phi)(0)) << " "
          << d((*a.switch_phi)(1)) << " " << d((*a.switch_phi)(2)) << "\n";
    }
  }
  out << "\n[weights]\n";
  out << "alpha1 = " << d(c.weights.alpha1) << "\n";
  out << "alpha2 = " << d(c.weights.alpha2) << "\n";
  out << "alpha3 = " << d(c.weights.alpha3) << "\n";
  out << "Q = " << d(c.weights.Q(0, 0)) << " " << d(c.weights.Q(1, 1)) << " "
      << d(c.weights.Q(2, 2)) << " " << d(c.weights.Q(3, 3)) << "\n";
  out << "R = " << d(c.weights.R(0, 0)) << " " << d(c.weights.R(1, 1)) << "\n";
  out << "L = " << d(c.weights.safe_distance) << "\n";
  out << "beta = " << d(c.weights.beta) << "\n";
  out << "alpha_risk = " << d(c.weights.alpha_risk) << "\n";
  out << "tau = " << d(c.weights.tau) << "\n";
  out << "\n[predictor]\n";
  out << "cov0 = " << d(c.predictor.cov0) << "\n";
  out << "cov_growth = " << d(c.predictor.cov_growth) << "\n";
  out << "sigma_obs = " << d(c.predictor.sigma_obs) << "\n";
  out << "history_window = " << c.predictor.history_window << "\n";
  out << "sigma0 = " << d(c.predictor.sigma0) << "\n";
  out << "sigma_rate = " << d(c.predictor.sigma_rate) << "\n";
  out << "brake_decel = " << d(c.predictor.brake_decel) << "\n";
  out << "drift_threshold = " << d(c.predictor.drift_threshold) << "\n";
  out << "lateral_gain = " << d(c.predictor.lateral_gain) << "\n";
  out << "lateral_vmax = " << d(c.predictor.lateral_vmax) << "\n";
  out << "offlane_factor = " << d(c.predictor.offlane_factor) << "\n";
  out << "adjacent_gap = " << d(c.predictor.adjacent_gap) << "\n";
  out << "\n[planner]\n";
  out << "horizon = " << c.planner.horizon << "\n";
  out << "max_iterations = " << c.planner.max_iterations << "\n";
  out << "convergence_tol = " << d(c.planner.convergence_tol) << "\n";
  out << "fd_step = " << d(c.planner.fd_step) << "\n";
  out << "initial_step = " << d(c.planner.initial_step) << "\n";
  out << "min_step = " << d(c.planner.min_step) << "\n";
  out << "d_sat = " << d(c.planner.d_sat) << "\n";
  out << "ref_lateral_gain = " << d(c.planner.ref_lateral_gain) << "\n";
  out << "ref_lateral_vmax = " << d(c.planner.ref_lateral_vmax) << "\n";
  out << "particles = " << c.belief_particles << "\n";
  out << "belief_prior = " << d(c.belief_prior_mean(0)) << " "
      << d(c.belief_prior_mean(1)) << " " << d(c.belief_prior_mean(2)) << "\n";
  out << "belief_prior_var = " << d(c.belief_prior_var) << "\n";
  out << "lookahead = " << c.assimilation.lookahead << "\n";
  out << "ess_ratio = " << d(c.assimilation.ess_ratio) << "\n";
  out << "jitter_var = " << d(c.assimilation.jitter_var) << "\n";
  out << "a_min = " << d(c.limits.input.a_min) << "\n";
  out << "a_max = " << d(c.limits.input.a_max) << "\n";
  out << "omega_min = " << d(c.limits.input.omega_min) << "\n";
  out << "omega_max = " << d(c.limits.input.omega_max) << "\n";
  out << "v_max = " << d(c.limits.v_max) << "\n";
  return out.str();
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& path,
                    const std::string& message) {
    if (!ok) throw std::invalid_argument(path + ": " + message);
  };
  require(sim.episode_length > 0.0, "sim.episode_length", "must be positive");
  require(sim.dt > 0.0, "sim.dt", "must be positive");
  lane_map.validate();
  for (std::size_t i = 0; i < lane_map.lanes.size(); ++i) {
    require(lane_map.lanes[i].width > sim.footprint_width,
            "lane[" + std::to_string(i) + "].width",
            "must exceed the vehicle width");
  }
  require(ego_target_lane < lane_map.lanes.size(), "ego.target_lane",
          "lane index out of range");
  require(ego_target_speed > 0.0, "ego.target_speed", "must be positive");
  require(ego_spawn.finite(), "ego.spawn", "must be finite");
  try {
    weights.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("weights: ") + e.what());
  }
  require(belief_particles >= 100, "planner.particles", "must be >= 100");
  require(assimilation.lookahead >= 1 &&
              assimilation.lookahead <= planner.horizon,
          "planner.lookahead", "must be in [1, horizon]");
  require(planner.horizon >= 1, "planner.horizon", "must be >= 1");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentSpec& agent = agents[i];
    const std::string path = "agent[" + std::to_string(i) + "]";
    require(agent.spawn.finite(), path + ".spawn", "must be finite");
    require(agent.phi.minCoeff() >= 0.0 && agent.phi.allFinite(),
            path + ".phi", "components must be nonnegative and finite");
    require(!agent.route.empty(), path + ".route", "must not be empty");
    for (int idx : agent.route) {
      require(idx >= 0 && static_cast<std::size_t>(idx) < lane_map.path_count(),
              path + ".route", "path index out of range");
    }
    if (agent.switch_time) {
      require(*agent.switch_time >= 0.0 &&
                  *agent.switch_time <= sim.episode_length,
              path + ".switch_time", "must lie within the episode");
      require(agent.switch_phi.has_value(), path + ".switch_phi",
              "required when switch_time is set");
    }
    if (agent.switch_phi) {
      require(agent.switch_phi->minCoeff() >= 0.0, path + ".switch_phi",
              "components must be nonnegative");
    }
  }
  // Spawns must not overlap.
  std::vector<const AgentState*> spawns;
  spawns.push_back(&ego_spawn);
  for (const AgentSpec& a : agents) spawns.push_back(&a.spawn);
  for (std::size_t i = 0; i < spawns.size(); ++i) {
    for (std::size_t j = i + 1; j < spawns.size(); ++j) {
      if (footprints_overlap(*spawns[i], *spawns[j], sim.footprint_length,
                             sim.footprint_width)) {
        throw std::invalid_argument(
            "spawns: vehicles " + std::to_string(i) + " and " +
            std::to_string(j) + " overlap at spawn");
      }
    }
  }
}

ObjectiveWeights ScenarioConfig::variant_weights(Variant variant) const {
  ObjectiveWeights w = weights;
  switch (variant) {
    case Variant::kProbing:
      break;
    case Variant::kNoProbing:
      w.alpha3 = 0.0;
      break;
    case Variant::kConservative:
      w.alpha3 = 0.0;
      w.beta *= 4.0;
      break;
  }
  return w;
}

PlannerSetup ScenarioConfig::planner_setup(Variant variant) const {
  PlannerSetup setup;
  setup.params = planner;
  setup.params.dt = sim.dt;
  setup.weights = variant_weights(variant);
  setup.predictor = predictor;
  setup.limits = limits;
  setup.target_lane = ego_target_lane;
  setup.target_speed = ego_target_speed;
  setup.belief_particles = belief_particles;
  setup.belief_prior_mean = belief_prior_mean;
  setup.belief_prior_var = belief_prior_var;
  setup.assimilation = assimilation;
  setup.seed = sim.seed;
  return setup;
}

Lane ScenarioConfig::composite_route(const AgentSpec& agent) const {
  Lane route;
  route.width = lane_map.path(agent.route.front()).width;
  for (int idx : agent.route) {
    const Lane& part = lane_map.path(idx);
    for (const Eigen::Vector2d& p : part.centerline) {
      if (!route.centerline.empty() &&
          (route.centerline.back() - p).norm() < 1e-6) {
        continue;
      }
      route.centerline.push_back(p);
    }
  }
  return route;
}

}  // namespace probe_mpc
