#include "census/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "census/hashing.hpp"
#include "census/pipeline.hpp"

namespace census {

void SimConfig::validate() const {
  if (individuals < 1) throw ConfigError("sim.individuals", "must be >= 1");
  if (cameras < 1) throw ConfigError("sim.cameras", "must be >= 1");
  if (plains_individuals < 0) throw ConfigError("sim.plains_individuals", "must be >= 0");
  if (study_days < 1) throw ConfigError("sim.study_days", "must be >= 1");
  auto frac = [](const char* k, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(k, "must lie in [0, 1]");
  };
  frac("sim.transient_fraction", transient_fraction);
  frac("sim.night_fraction", night_fraction);
  frac("sim.allowed_view_fraction", allowed_view_fraction);
  frac("sim.good_fraction", good_fraction);
  frac("sim.good_ca_min", good_ca_min);
  frac("sim.good_ca_max", good_ca_max);
  frac("sim.poor_ca_min", poor_ca_min);
  frac("sim.poor_ca_max", poor_ca_max);
  if (good_ca_min > good_ca_max || poor_ca_min > poor_ca_max) throw ConfigError("sim.good_ca_min", "empty ca range");
  if (!(base_rate >= 0.0)) throw ConfigError("sim.base_rate", "must be >= 0");
  if (burst_min < 1 || burst_max < burst_min || burst_max > 12)
    throw ConfigError("sim.burst_max", "burst sizes must satisfy 1 <= min <= max <= 12");
  if (exact_encounters && *exact_encounters < 0) throw ConfigError("sim.exact_encounters", "must be >= 0");
  double mix_total = 0.0;
  for (const auto& [s, w] : strategy_mix) {
    if (!(w >= 0.0)) throw ConfigError("sim.strategy_mix", "weights must be >= 0");
    mix_total += w;
  }
  if (!(mix_total > 0.0)) throw ConfigError("sim.strategy_mix", "at least one strategy needs positive weight");
  for (const auto& [s, m] : rate_multiplier)
    if (!(m >= 0.0)) throw ConfigError("sim.rate_multiplier", "multipliers must be >= 0");
  if (lat_min > lat_max || lon_min > lon_max) throw ConfigError("sim.lat_min", "empty study region");
}

namespace {

constexpr int kDaySlots = 75;    // 06:30 .. 18:50, ten minutes apart
constexpr int kNightSlots = 69;  // 19:00 .. 23:50 and 00:00 .. 06:20
constexpr int kSlotSeconds = 600;

int slot_second_of_day(bool day, int slot) {
  if (day) return 6 * 3600 + 30 * 60 + slot * kSlotSeconds;
  if (slot < 30) return 19 * 3600 + slot * kSlotSeconds;
  return (slot - 30) * kSlotSeconds;
}

double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

std::string padded(const char* prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

double distance_km(const GeoPoint& a, const GeoPoint& b) {
  const double kDeg = 111.32;
  const double dy = (a.lat - b.lat) * kDeg;
  const double dx = (a.lon - b.lon) * kDeg * std::cos(a.lat * 3.14159265358979323846 / 180.0);
  return std::sqrt(dx * dx + dy * dy);
}

struct Animal {
  std::string id;
  Species species;
  GeoPoint home;
  int present_start;
  int present_days;
};

}  // namespace

SimOutput generate(const SimConfig& cfg) {
  cfg.validate();
  SimOutput out;
  const std::uint64_t root = mix(cfg.seed, 0x5157ULL);

  // cameras: strategies apportioned by largest remainder over the mix
  std::vector<Strategy> strategies;
  {
    double total = 0.0;
    for (const auto& [_, w] : cfg.strategy_mix) total += w;
    std::vector<std::pair<double, Strategy>> remainders;
    for (Strategy s : kAllStrategies) {
      auto it = cfg.strategy_mix.find(s);
      if (it == cfg.strategy_mix.end() || it->second <= 0.0) continue;
      double exact = cfg.cameras * it->second / total;
      auto whole = static_cast<int>(std::floor(exact));
      strategies.insert(strategies.end(), static_cast<std::size_t>(whole), s);
      remainders.emplace_back(exact - whole, s);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (std::size_t i = 0; strategies.size() < static_cast<std::size_t>(cfg.cameras); ++i)
      strategies.push_back(remainders[i % remainders.size()].second);
  }
  const int cam_width = cfg.cameras < 100 ? 2 : cfg.cameras < 1000 ? 3 : 4;
  for (int c = 0; c < cfg.cameras; ++c) {
    KeyedStream rs(mix(root ^ 0xC, static_cast<std::uint64_t>(c)));
    Camera cam;
    cam.camera_id = padded("C", static_cast<std::size_t>(c + 1), cam_width);
    cam.location = {round4(cfg.lat_min + (cfg.lat_max - cfg.lat_min) * rs.uniform()) ,
                    round4(cfg.lon_min + (cfg.lon_max - cfg.lon_min) * rs.uniform())};
    cam.strategy = strategies[static_cast<std::size_t>(c)];
    out.dataset.cameras.push_back(std::move(cam));
  }

  std::vector<Animal> animals;
  const int transients = static_cast<int>(std::lround(cfg.individuals * cfg.transient_fraction));
  for (int i = 0; i < cfg.individuals + cfg.plains_individuals; ++i) {
    const bool grevys = i < cfg.individuals;
    KeyedStream rs(mix(root ^ 0xA, static_cast<std::uint64_t>(i)));
    Animal a;
    a.id = grevys ? padded("I", static_cast<std::size_t>(i + 1), 4)
                  : padded("P", static_cast<std::size_t>(i - cfg.individuals + 1), 4);
    a.species = grevys ? Species::grevys : Species::plains;
    a.home = {cfg.lat_min + (cfg.lat_max - cfg.lat_min) * rs.uniform(),
              cfg.lon_min + (cfg.lon_max - cfg.lon_min) * rs.uniform()};
    a.present_start = 0;
    a.present_days = cfg.study_days;
    if (grevys && i < transients) {
      a.present_days = std::max(1, cfg.study_days / 4);
      a.present_start = static_cast<int>(rs.below(static_cast<std::uint64_t>(cfg.study_days - a.present_days + 1)));
    }
    animals.push_back(std::move(a));
  }

  struct Burst {
    std::size_t camera;
    std::size_t animal;
    int day;
    bool daytime;
    int slot;
    std::uint64_t key;
  };
  std::vector<Burst> bursts;
  for (std::size_t c = 0; c < out.dataset.cameras.size(); ++c) {
    const Camera& cam = out.dataset.cameras[c];
    const double mult = cfg.rate_multiplier.count(cam.strategy) ? cfg.rate_multiplier.at(cam.strategy) : 1.0;
    std::set<std::tuple<int, bool, int>> taken;
    for (std::size_t i = 0; i < animals.size(); ++i) {
      const Animal& a = animals[i];
      const std::uint64_t pair_key = mix(mix(root ^ 0xE, c), i);
      KeyedStream rs(pair_key);
      double decay = 1.0;
      if (cfg.home_range_km > 0.0) {
        double d = distance_km(cam.location, a.home);
        decay = std::exp(-d * d / (2.0 * cfg.home_range_km * cfg.home_range_km));
      }
      const std::int64_t count = cfg.exact_encounters
                                     ? *cfg.exact_encounters
                                     : rs.poisson(cfg.base_rate * mult * decay * a.present_days);
      for (std::int64_t k = 0; k < count; ++k) {
        const int day = a.present_start + static_cast<int>(rs.below(static_cast<std::uint64_t>(a.present_days)));
        const bool daytime = !rs.bernoulli(cfg.night_fraction);
        const int slots = daytime ? kDaySlots : kNightSlots;
        int slot = static_cast<int>(rs.below(static_cast<std::uint64_t>(slots)));
        int tries = 0;
        while (taken.count({day, daytime, slot}) && tries < slots) {
          slot = (slot + 1) % slots;
          ++tries;
        }
        if (tries == slots) continue;  // camera-day saturated
        taken.insert({day, daytime, slot});
        bursts.push_back({c, i, day, daytime, slot, mix(pair_key, static_cast<std::uint64_t>(k) + 1)});
      }
    }
  }

  auto start_of = [&](const Burst& b) {
    return cfg.study_start + EpochSeconds{b.day} * 86400 + slot_second_of_day(b.daytime, b.slot);
  };
  std::sort(bursts.begin(), bursts.end(), [&](const Burst& x, const Burst& y) {
    auto sx = start_of(x), sy = start_of(y);
    if (sx != sy) return sx < sy;
    return x.camera < y.camera;
  });

  static constexpr Viewpoint kAllowed[] = {Viewpoint::right, Viewpoint::front_right, Viewpoint::back_right};
  static constexpr Viewpoint kOther[] = {Viewpoint::left, Viewpoint::front, Viewpoint::back};
  std::size_t next_id = 1;
  const int half = cfg.study_days / 2;
  for (const Burst& b : bursts) {
    const Camera& cam = out.dataset.cameras[b.camera];
    const Animal& animal = animals[b.animal];
    KeyedStream rs(b.key);
    PlantedEncounter pe;
    pe.camera_id = cam.camera_id;
    pe.individual_id = animal.id;
    pe.daytime = b.daytime;
    const int size = cfg.burst_min + static_cast<int>(rs.below(static_cast<std::uint64_t>(cfg.burst_max - cfg.burst_min + 1)));
    EpochSeconds t = start_of(b) + static_cast<EpochSeconds>(rs.below(60));
    pe.start = t;
    for (int k = 0; k < size; ++k) {
      if (k > 0) t += 1 + static_cast<EpochSeconds>(rs.below(40));
      Annotation a;
      a.annotation_id = padded("A", next_id, 6);
      a.image_id = padded("IMG", next_id, 6);
      ++next_id;
      a.camera_id = cam.camera_id;
      a.timestamp = t;
      a.viewpoint = rs.bernoulli(cfg.allowed_view_fraction) ? kAllowed[rs.below(3)] : kOther[rs.below(3)];
      a.species = animal.species;
      if (rs.bernoulli(cfg.good_fraction))
        a.ca_score = round4(cfg.good_ca_min + (cfg.good_ca_max - cfg.good_ca_min) * rs.uniform());
      else
        a.ca_score = round4(cfg.poor_ca_min + (cfg.poor_ca_max - cfg.poor_ca_min) * rs.uniform());
      const double blur = round4(rs.uniform());
      if (cfg.emit_blur) a.blur_score = blur;
      a.gps = cam.location;
      a.source = Source::camera_trap;
      out.truth[a.annotation_id] = animal.id;
      out.events[a.annotation_id] = b.day < half ? 1 : 2;
      pe.annotation_ids.push_back(a.annotation_id);
      out.dataset.annotations.push_back(std::move(a));
    }
    ++out.encounters_per_strategy[std::string(to_string(cam.strategy))];
    out.encounters.push_back(std::move(pe));
  }
  return out;
}

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

EvalReport evaluate(const std::map<std::string, std::string>& predicted,
                    const std::map<std::string, std::string>& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("evaluate: predicted and truth cover different annotation sets");
  std::map<std::pair<std::string, std::string>, double> cells;
  std::map<std::string, double> rows, cols;
  for (auto pit = predicted.begin(), tit = truth.begin(); pit != predicted.end(); ++pit, ++tit) {
    if (pit->first != tit->first)
      throw std::invalid_argument("evaluate: annotation " + pit->first + " missing from truth");
    cells[{pit->second, tit->second}] += 1.0;
    rows[pit->second] += 1.0;
    cols[tit->second] += 1.0;
  }
  double tp = 0, pp = 0, tt = 0;
  for (const auto& [_, n] : cells) tp += choose2(n);
  for (const auto& [_, n] : rows) pp += choose2(n);
  for (const auto& [_, n] : cols) tt += choose2(n);
  const double all = choose2(static_cast<double>(predicted.size()));

  EvalReport r;
  r.precision = pp == 0 ? 1.0 : tp / pp;
  r.recall = tt == 0 ? 1.0 : tp / tt;
  r.f1 = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  const double expected = all == 0 ? 0.0 : pp * tt / all;
  const double max_index = (pp + tt) / 2.0;
  r.ari = max_index == expected ? 1.0 : (tp - expected) / (max_index - expected);
  r.predicted_clusters = rows.size();
  r.true_clusters = cols.size();
  r.count_delta = static_cast<long long>(rows.size()) - static_cast<long long>(cols.size());
  return r;
}

std::string serialize_events_csv(const std::map<std::string, int>& events) {
  std::string out = "annotation_id,event\n";
  for (const auto& [a, e] : events) out += a + "," + std::to_string(e) + "\n";
  return out;
}

}  // namespace census
