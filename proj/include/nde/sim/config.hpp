#pragma once

#include <stdexcept>
#include <string>

#include "nde/core/situation.hpp"

namespace nde::sim {

struct RoadConfig {
  int lanes = 3;
  double length = 1500.0;  // ring circumference, m
  double lane_width = 3.5;
  double vehicle_length = 5.0;
  bool periodic = true;
};

struct IdmParams {
  double a_max = 0.8;  // m/s^2
  double v0 = 37.0;    // desired speed, m/s
  double delta = 3.0;
  double b = 1.3;      // comfortable deceleration, m/s^2
  double s0 = 0.1;     // jam distance, m
  double T = 0.8;      // time headway, s
};

struct MobilParams {
  double politeness = 0.1;
  double threshold = 0.2;    // m/s^2
  double safe_decel = -3.0;  // new follower may not be forced below this
};

struct InitConfig {
  double d0 = 50.0;
  double p_cf = 0.68;
  double d_obs = 115.0;
  int resample_limit = 1000;
};

struct SimConfig {
  RoadConfig road;
  double dt = 0.1;
  double lc_duration = 1.0;
  double speed_min = 20.0;  // background speeds stay in [speed_min, speed_max)
  double speed_max = 40.0;
  double accel_min = -4.0;
  double accel_max = 2.0;
  IdmParams idm;
  double idm_sigma = 0.3;  // stochastic IDM and fallback spread
  MobilParams mobil;
  InitConfig init;
  GridConfig grid;
  double warmup = 600.0;      // s, NDE statistics mode
  double collection = 300.0;  // s
  double av_distance = 400.0; // m, AV testing mode
  double av_max_time = 300.0; // s, safety stop for AV episodes

  int lc_ticks() const {
    const double t = lc_duration / dt;
    return static_cast<int>(t + 0.5);
  }

  void validate() const {
    auto req = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("simulation config: ") + what);
    };
    req(road.lanes >= 1, "need at least one lane");
    req(road.length > 2 * road.vehicle_length, "road too short");
    req(road.periodic, "only periodic roads are supported");
    req(road.vehicle_length > 0 && road.lane_width > 0, "vehicle length and lane width must be positive");
    req(dt > 0, "dt must be positive");
    req(lc_ticks() >= 2 && lc_ticks() % 2 == 0, "lane-change duration must be an even number of steps");
    req(speed_max > speed_min, "speed bounds inverted");
    req(accel_max > accel_min, "acceleration bounds inverted");
    req(idm_sigma >= 0, "sigma must be >= 0");
    req(init.p_cf >= 0 && init.p_cf <= 1, "p_cf must be in [0, 1]");
    req(init.d0 > 0 && init.d_obs > 0, "d0 and d_obs must be positive");
    req(warmup >= 0 && collection > 0, "collection window must be positive");
    req(av_distance > 0, "AV distance must be positive");
  }
};

}  // namespace nde::sim
