#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evgrid/instance.hpp"
#include "evgrid/rng.hpp"
#include "helpers.hpp"

using namespace evgrid;

namespace {
const char* kHeader = "pickup_datetime,dropoff_datetime,trip_distance,pulid,dolid,passenger_count\n";
}

TEST_CASE("trips: representative row parses field by field") {
  std::istringstream in(std::string(kHeader) +
                        "12/31/2018 11:58:45, 1/1/2019 12:37:04, 16.6, 162, 26, 1\n");
  const TripParseResult r = parse_trip_records(in);
  REQUIRE(r.diagnostics.empty());
  REQUIRE(r.records.size() == 1);
  const TripRecord& t = r.records[0];
  CHECK(t.trip_distance == 16.6);
  CHECK(t.pickup_location_id == "162");
  CHECK(t.dropoff_location_id == "26");
  CHECK(t.passenger_count == 1);
  CHECK(t.pickup_datetime.year == 2018);
  CHECK(t.dropoff_datetime.year == 2019);
  CHECK(t.dropoff_datetime >= t.pickup_datetime);
}

TEST_CASE("trips: header-only file gives an empty list") {
  std::istringstream in(kHeader);
  const TripParseResult r = parse_trip_records(in);
  CHECK(r.records.empty());
  CHECK(r.diagnostics.empty());
}

TEST_CASE("trips: invalid rows are rejected with line-numbered diagnostics") {
  std::istringstream in(std::string(kHeader) +
                        "1/2/2019 08:00:00, 1/2/2019 08:30:00, 2.0, 10, 11, 0\n"   // zero passengers
                        "not-a-date, 1/2/2019 08:30:00, 2.0, 10, 11, 2\n"          // bad timestamp
                        "1/2/2019 09:00:00, 1/2/2019 09:30:00, 2.0, 10, 11, 2\n");  // fine
  const TripParseResult r = parse_trip_records(in);
  CHECK(r.records.size() == 1);
  REQUIRE(r.diagnostics.size() == 2);
  CHECK(r.diagnostics[0].find("line 2") != std::string::npos);
  CHECK(r.diagnostics[0].find("passenger_count") != std::string::npos);
  CHECK(r.diagnostics[1].find("line 3") != std::string::npos);
  CHECK(r.diagnostics[1].find("pickup_datetime") != std::string::npos);
}

TEST_CASE("trips: unknown column in the header is fatal and names the field") {
  std::istringstream in("pickup_datetime,dropoff_datetime,distance,pulid,dolid,passenger_count\nrow\n");
  CHECK_THROWS_WITH_AS(parse_trip_records(in),
                       doctest::Contains("unknown column 'distance'"), std::invalid_argument);
}

TEST_CASE("trips: parse after serialize is the identity") {
  Rng rng(99);
  std::vector<TripRecord> trips;
  for (int i = 0; i < 50; ++i) {
    TripRecord t;
    t.pickup_datetime = {2018, rng.uniform_int(1, 12), rng.uniform_int(1, 28), rng.uniform_int(0, 23),
                         rng.uniform_int(0, 59), rng.uniform_int(0, 59)};
    t.dropoff_datetime = t.pickup_datetime;
    t.dropoff_datetime.hour = 23;
    t.trip_distance = std::round(rng.uniform(0.0, 30.0) * 100.0) / 100.0;
    t.pickup_location_id = std::to_string(rng.uniform_int(1, 200));
    t.dropoff_location_id = std::to_string(rng.uniform_int(1, 200));
    t.passenger_count = rng.uniform_int(1, 6);
    trips.push_back(t);
  }
  std::ostringstream out;
  serialize_trip_records(out, trips);
  std::istringstream in(out.str());
  const TripParseResult r = parse_trip_records(in);
  REQUIRE(r.diagnostics.empty());
  REQUIRE(r.records.size() == trips.size());
  for (size_t i = 0; i < trips.size(); ++i) CHECK(r.records[i] == trips[i]);
}

namespace {

TripRecord make_trip(int month, int day, int hour, int minute, const std::string& pu, const std::string& dn,
                     int passengers) {
  TripRecord t;
  t.pickup_datetime = {2018, month, day, hour, minute, 0};
  t.dropoff_datetime = {2018, month, day, hour, minute + 20, 0};
  t.trip_distance = 1.0;
  t.pickup_location_id = pu;
  t.dropoff_location_id = dn;
  t.passenger_count = passengers;
  return t;
}

}  // namespace

TEST_CASE("clusterize: two-day toy set by hand") {
  // node 3 sees pickups 4 and 6 on consecutive days, nothing else moves
  std::vector<TripRecord> trips{
      make_trip(3, 1, 8, 0, "a", "b", 4),
      make_trip(3, 2, 8, 30, "a", "b", 6),
  };
  const std::map<std::string, int> where{{"a", 3}, {"b", 2}};
  const DemandProfile p = clusterize(trips, {6 * 60, 11 * 60}, where, 5);
  CHECK(p.mean_pickup[3] == doctest::Approx(5.0));
  CHECK(p.mean_dropoff[2] == doctest::Approx(5.0));
  // net at node 3 over the two days: {-4, -6}; sample std = sqrt(2)
  CHECK(p.net_std[3] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // net at node 2: {4, 6} -> same dispersion
  CHECK(p.net_std[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.mean_pickup[1] == 0.0);
  CHECK(p.net_std[1] == 0.0);
}

TEST_CASE("clusterize: a single day has no dispersion") {
  std::vector<TripRecord> trips{make_trip(3, 1, 8, 0, "a", "b", 4), make_trip(3, 1, 9, 0, "a", "b", 2)};
  const std::map<std::string, int> where{{"a", 1}, {"b", 2}};
  const DemandProfile p = clusterize(trips, {6 * 60, 11 * 60}, where, 3);
  CHECK(p.mean_pickup[1] == doctest::Approx(6.0));
  for (int j = 1; j < 3; ++j) CHECK(p.net_std[j] == 0.0);
}

TEST_CASE("clusterize: trips outside the window leave an all-zero profile") {
  std::vector<TripRecord> trips{make_trip(3, 1, 14, 0, "a", "b", 4)};
  const std::map<std::string, int> where{{"a", 1}, {"b", 2}};
  const DemandProfile p = clusterize(trips, {6 * 60, 11 * 60}, where, 3);
  for (int j = 0; j < 3; ++j) {
    CHECK(p.mean_pickup[j] == 0.0);
    CHECK(p.mean_dropoff[j] == 0.0);
    CHECK(p.net_std[j] == 0.0);
  }
}

TEST_CASE("clusterize: order independence") {
  Rng rng(7);
  std::vector<TripRecord> trips;
  for (int i = 0; i < 40; ++i)
    trips.push_back(make_trip(rng.uniform_int(1, 2), rng.uniform_int(1, 5), rng.uniform_int(6, 10),
                              rng.uniform_int(0, 59), std::to_string(rng.uniform_int(1, 3)),
                              std::to_string(rng.uniform_int(1, 3)), rng.uniform_int(1, 4)));
  std::map<std::string, int> where{{"1", 1}, {"2", 2}, {"3", 3}};
  const DemandProfile a = clusterize(trips, {6 * 60, 11 * 60}, where, 4);
  std::reverse(trips.begin(), trips.end());
  const DemandProfile b = clusterize(trips, {6 * 60, 11 * 60}, where, 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(a.mean_pickup[j] == b.mean_pickup[j]);
    CHECK(a.mean_dropoff[j] == b.mean_dropoff[j]);
    CHECK(a.net_std[j] == b.net_std[j]);
  }
}

TEST_CASE("clusterize: unmapped ids are listed in the error") {
  std::vector<TripRecord> trips{make_trip(3, 1, 8, 0, "unknown1", "unknown2", 1)};
  CHECK_THROWS_WITH_AS(clusterize(trips, {6 * 60, 11 * 60}, {}, 3), doctest::Contains("unknown1"),
                       std::invalid_argument);
}

TEST_CASE("build_instance: five customers make |J0| = 6") {
  const ProblemInstance inst = test_helpers::line_instance(5, 2);
  CHECK(inst.num_nodes() == 6);
  CHECK(inst.num_customers() == 5);
}

TEST_CASE("build_instance: referential integrity failures") {
  ProblemInstance base = test_helpers::line_instance(3, 1, {1});
  SUBCASE("station with a nonexistent grid node") {
    auto stations = base.stations;
    stations[0].grid_node = 99;
    CHECK_THROWS(build_instance(base.node_names, base.travel_time, base.demand, base.vehicles, stations,
                                base.grid, base.cost_time, base.cost_energy, base.horizon));
  }
  SUBCASE("no vehicles") {
    CHECK_THROWS(build_instance(base.node_names, base.travel_time, base.demand, {}, base.stations, base.grid,
                                base.cost_time, base.cost_energy, base.horizon));
  }
  SUBCASE("nonzero travel diagonal") {
    auto tt = base.travel_time;
    tt[1][1] = 3.0;
    CHECK_THROWS(build_instance(base.node_names, tt, base.demand, base.vehicles, base.stations, base.grid,
                                base.cost_time, base.cost_energy, base.horizon));
  }
  SUBCASE("demand at the depot") {
    auto demand = base.demand;
    demand.mean_pickup[0] = 1.0;
    CHECK_THROWS(build_instance(base.node_names, base.travel_time, demand, base.vehicles, base.stations,
                                base.grid, base.cost_time, base.cost_energy, base.horizon));
  }
}

TEST_CASE("generate_synthetic: scale contract on total expected pickups") {
  const ProblemInstance inst = generate_synthetic(1, 5, 2, 224.0);
  double total = 0.0;
  for (int j = 1; j < inst.num_nodes(); ++j) total += inst.demand.mean_pickup[j];
  CHECK(total >= 212.0);
  CHECK(total <= 236.0);
}

TEST_CASE("generate_synthetic: deterministic for a fixed seed") {
  const ProblemInstance a = generate_synthetic(42, 6, 2, 100.0);
  const ProblemInstance b = generate_synthetic(42, 6, 2, 100.0);
  std::ostringstream sa, sb;
  write_instance(sa, a);
  write_instance(sb, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("generate_synthetic: smallest instance stands") {
  const ProblemInstance inst = generate_synthetic(3, 1, 1, 10.0);
  CHECK(inst.num_customers() == 1);
  CHECK(inst.travel_time[0][1] > 0.0);
}

TEST_CASE("generate_synthetic: triangle inequality holds") {
  const ProblemInstance inst = generate_synthetic(11, 8, 3, 300.0);
  const int n = inst.num_nodes();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        CHECK(inst.travel_time[i][j] <= inst.travel_time[i][k] + inst.travel_time[k][j] + 1e-9);
}

TEST_CASE("instance file: write-read round trip is exact") {
  const ProblemInstance inst = generate_synthetic(5, 6, 2, 120.0);
  std::ostringstream first;
  write_instance(first, inst);
  std::istringstream in(first.str());
  const ProblemInstance back = read_instance(in);
  std::ostringstream second;
  write_instance(second, back);
  CHECK(first.str() == second.str());
}

TEST_CASE("instance file: malformed content names the line") {
  std::istringstream in("[nodes]\nhorizon\n");
  CHECK_THROWS_WITH_AS(read_instance(in), doctest::Contains("line 2"), std::invalid_argument);
}

TEST_CASE("reference instance: pinned shape") {
  const ProblemInstance inst = reference_instance_15();
  CHECK(inst.num_customers() == 15);
  CHECK(inst.vehicles.size() == 6);
  CHECK(inst.stations.size() == 6);
  CHECK(inst.vehicles[0].capacity == 150.0);
  // stations at customers 1, 2, 6, 8, 9, 10
  std::vector<int> nodes;
  for (const auto& s : inst.stations) nodes.push_back(s.transport_node);
  CHECK(nodes == std::vector<int>{1, 2, 6, 8, 9, 10});
  double total = 0.0;
  for (int j = 1; j < inst.num_nodes(); ++j) total += inst.demand.mean_pickup[j];
  CHECK(total == doctest::Approx(9 * 60.0 + 6 * 25.0));
}
