#include "probe_mpc/trace_io.hpp"

#include <json.hpp>

namespace probe_mpc {

using nlohmann::json;

void write_trace_jsonl(const EpisodeTrace& trace, std::ostream& out) {
  std::size_t planner_index = 0;
  double last_time = -1.0;
  for (const VehicleRecord& r : trace.vehicles) {
    if (r.t != last_time && planner_index < trace.planner_steps.size() &&
        trace.planner_steps[planner_index].time <= r.t + 1e-9) {
      const StepDiagnostics& d = trace.planner_steps[planner_index];
      json record;
      record["type"] = "planner";
      record["t"] = d.time;
      record["objective"] = d.objective_value;
      record["utility"] = d.breakdown.utility;
      record["safety_penalty"] = d.breakdown.safety_penalty;
      record["info"] = d.breakdown.info;
      record["iterations"] = d.iterations;
      record["converged"] = d.converged;
      json risk_max = json::object();
      for (const auto& [agent, maxima] : d.risk_max) {
        risk_max[std::to_string(agent)] = maxima;
      }
      record["risk_max"] = std::move(risk_max);
      json gains = json::object();
      for (const auto& [agent, g] : d.info_gains) {
        gains[std::to_string(agent)] = g;
      }
      record["info_gains"] = std::move(gains);
      json beliefs = json::object();
      for (const auto& [agent, mean] : d.belief_means) {
        beliefs[std::to_string(agent)] = {mean(0), mean(1), mean(2)};
      }
      record["belief_means"] = std::move(beliefs);
      out << record.dump() << "\n";
      ++planner_index;
      last_time = r.t;
    }
    json record;
    record["t"] = r.t;
    record["id"] = r.id;
    record["x"] = r.x;
    record["y"] = r.y;
    record["theta"] = r.theta;
    record["v"] = r.v;
    record["a"] = r.a;
    record["omega"] = r.omega;
    out << record.dump() << "\n";
  }
}

void write_metrics_csv_header(std::ostream& out) {
  out << "episode,variant,success,collision,time_to_complete,"
         "gap_to_vehicle_1,gap_to_vehicle_2,mean_velocity,"
         "longitudinal_jerk,angular_jerk\n";
}

void write_metrics_csv_row(int episode, Variant variant,
                           const EpisodeMetrics& m, std::ostream& out) {
  out << episode << "," << variant_name(variant) << "," << (m.success ? 1 : 0)
      << "," << (m.collision ? 1 : 0) << "," << m.time_to_complete << ","
      << m.gap_vehicle1 << "," << m.gap_vehicle2 << "," << m.mean_velocity
      << "," << m.lon_jerk << "," << m.ang_jerk << "\n";
}

void write_campaign_csv(const CampaignResult& result, std::ostream& out) {
  out << "variant,episodes,success_rate,collision_rate,time_to_complete,"
         "gap_to_vehicle_1,gap_to_vehicle_2,mean_velocity,"
         "longitudinal_jerk,angular_jerk\n";
  for (const VariantSummary& s : result.summaries) {
    out << variant_name(s.variant) << "," << s.episodes << ","
        << s.success_rate << "," << s.collision_rate << ","
        << s.mean_time_to_complete << "," << s.mean_gap_vehicle1 << ","
        << s.mean_gap_vehicle2 << "," << s.mean_velocity << ","
        << s.mean_lon_jerk << "," << s.mean_ang_jerk << "\n";
  }
}

}  // namespace probe_mpc
