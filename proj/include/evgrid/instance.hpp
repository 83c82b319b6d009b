#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evgrid/grid.hpp"

namespace evgrid {

struct Timestamp {
  int year = 1970, month = 1, day = 1;
  int hour = 0, minute = 0, second = 0;

  auto operator<=>(const Timestamp&) const = default;
  long civil_day() const;          // days since 1970-01-01
  int minute_of_day() const { return hour * 60 + minute; }
  double epoch_minutes() const { return civil_day() * 1440.0 + hour * 60.0 + minute + second / 60.0; }
};

Timestamp parse_timestamp(const std::string& text);  // "M/D/YYYY HH:MM:SS"
std::string format_timestamp(const Timestamp& t);

struct TripRecord {
  Timestamp pickup_datetime;
  Timestamp dropoff_datetime;
  double trip_distance = 0.0;  // miles
  std::string pickup_location_id;
  std::string dropoff_location_id;
  int passenger_count = 0;

  bool operator==(const TripRecord&) const = default;
};

struct TripParseResult {
  std::vector<TripRecord> records;
  std::vector<std::string> diagnostics;  // one line-numbered entry per rejected row
};

// Expects the header
// pickup_datetime,dropoff_datetime,trip_distance,pulid,dolid,passenger_count.
// Invalid rows become diagnostics; a bad header throws.
TripParseResult parse_trip_records(std::istream& in);
TripParseResult parse_trip_records_file(const std::string& path);
void serialize_trip_records(std::ostream& out, std::span<const TripRecord> trips);

struct TimeWindowOfDay {
  int start_minute = 0;
  int end_minute = 24 * 60;
};

// Per transport node, index 0 = depot (always zero demand there).
struct DemandProfile {
  std::vector<double> mean_dropoff;
  std::vector<double> mean_pickup;
  std::vector<double> net_std;
  std::vector<double> epsilon;
  std::vector<double> earliest;
  std::vector<double> latest;

  int size() const { return static_cast<int>(mean_pickup.size()); }
  void resize(int n);
  void validate() const;
};

// Aggregates passenger counts per (node, calendar day) inside the daily
// window, then takes means over days and the sample standard deviation of
// net demand (dropoffs - pickups) across days.
DemandProfile clusterize(std::span<const TripRecord> trips, TimeWindowOfDay window,
                         const std::map<std::string, int>& location_map, int num_nodes,
                         double default_epsilon = 0.05);

struct VehicleSpec {
  std::string name;
  double capacity = 0.0;               // passengers
  double battery_min = 0.0;            // kWh
  double battery_max = 0.0;            // kWh
  double consumption_rate = 0.0;       // kWh/min
  double charge_rate = 0.0;            // kWh/min
  double max_time_before_recharge = 0.0;  // min
};

struct ChargingStation {
  int transport_node = -1;
  int grid_node = -1;
  double min_charge_time = 0.0;
  double max_charge_time = 0.0;
  bool has_power_bounds = false;
  double power_min = 0.0, power_max = 0.0;  // optional override for the envelope box
};

struct ProblemInstance {
  std::vector<std::string> node_names;  // [0] is the depot
  std::vector<std::vector<double>> travel_time;  // minutes, zero diagonal
  DemandProfile demand;
  std::vector<VehicleSpec> vehicles;
  std::vector<ChargingStation> stations;
  grid::GridNetwork grid;
  double cost_time = 0.0;    // $/min
  double cost_energy = 0.0;  // $/kWh
  double horizon = 0.0;      // minutes; depot time window is [0, horizon]

  int num_nodes() const { return static_cast<int>(node_names.size()); }
  int num_customers() const { return num_nodes() - 1; }
};

// Validates all cross references and component invariants, then returns the
// assembled instance.
ProblemInstance build_instance(std::vector<std::string> node_names,
                               std::vector<std::vector<double>> travel_time, DemandProfile demand,
                               std::vector<VehicleSpec> vehicles, std::vector<ChargingStation> stations,
                               grid::GridNetwork grid, double cost_time, double cost_energy, double horizon);

// Deterministic generator: planar points with Euclidean travel times (so the
// triangle inequality holds), demand summing to ~scale, wide windows along a
// nearest-neighbour tour, a small radial feeder with slack bounds.
ProblemInstance generate_synthetic(std::uint64_t seed, int num_locations, int num_vehicles, double scale);

// The pinned 15-location, 6-vehicle case used by the experiment scripts.
// Demand is shaped so the high-confidence model provably needs the whole
// fleet while the deterministic one does not.
ProblemInstance reference_instance_15();

ProblemInstance read_instance(std::istream& in);
ProblemInstance read_instance_file(const std::string& path);
void write_instance(std::ostream& out, const ProblemInstance& inst);
void write_instance_file(const std::string& path, const ProblemInstance& inst);

}  // namespace evgrid
