#include "certsched/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace certsched {
namespace {

// log P(Bin(n,p) <= k), computed termwise in log space for stability.
double log_binom_cdf(int k, int n, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return (k >= n) ? 0.0 : -std::numeric_limits<double>::infinity();
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) {
    const double lc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                      std::lgamma(n - i + 1.0);
    const double t = lc + i * lp + (n - i) * lq;
    terms.push_back(t);
    best = std::max(best, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

int direction_rank(char d) {
  switch (d) {
    case 'u': return 0;
    case 'd': return 1;
    case 'b': return 2;
    default: throw std::invalid_argument("unknown direction tag");
  }
}

// Raise bounds in worse SNR buckets so the map is non-increasing in the
// bucket index within each (hops, retx, blocklength) family.  Families may
// have occupancy holes, so the sweep carries a running maximum downward
// through every occupied bucket rather than only adjacent pairs.
template <typename Map, typename Get, typename Set>
void monotonize(Map& m, Get get, Set set) {
  std::map<std::tuple<int, int, int>, std::vector<typename Map::iterator>> families;
  for (auto it = m.begin(); it != m.end(); ++it) {
    const ClassKey& k = it->first;
    families[{k.hops, k.retx, k.block_idx}].push_back(it);
  }
  for (auto& [fam, rows] : families) {
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a->first.snr_bucket > b->first.snr_bucket;
    });
    double running = -std::numeric_limits<double>::infinity();
    for (auto& it : rows) {
      running = std::max(running, get(it->second));
      set(it->second, running);
    }
  }
}

}  // namespace

std::string format_record(const CalibrationRecord& r) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "(%llu, %d, %d, %s, %c, %d, %.4f, %.4f)",
                static_cast<unsigned long long>(r.seed), r.cycle, r.loop,
                r.key.str().c_str(), r.direction, r.deadline_met ? 1 : 0,
                r.realized_snr_db, r.predicted_snr_db);
  return buf;
}

CalibrationRecord parse_record(const std::string& line) {
  CalibrationRecord r;
  char keybuf[64] = {0};
  unsigned long long seed = 0;
  int met = 0;
  const int got = std::sscanf(line.c_str(), " ( %llu , %d , %d , %63[^,] , %c , %d , %lf , %lf )",
                              &seed, &r.cycle, &r.loop, keybuf, &r.direction,
                              &met, &r.realized_snr_db, &r.predicted_snr_db);
  if (got != 8) throw std::runtime_error("malformed calibration record: " + line);
  r.seed = seed;
  std::string key = keybuf;
  key.erase(key.find_last_not_of(" \t") + 1);
  r.key = ClassKey::parse(key);
  r.deadline_met = met != 0;
  return r;
}

void write_records(const std::string& path, const std::vector<CalibrationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& r : records) out << format_record(r) << '\n';
}

std::vector<CalibrationRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<CalibrationRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_record(line));
  }
  return out;
}

double clopper_pearson_upper(int misses, int n, double confidence) {
  if (n <= 0) return 1.0;
  if (misses < 0 || misses > n) throw std::invalid_argument("misses out of range");
  if (misses >= n) return 1.0;
  const double target = std::log(1.0 - confidence);
  double lo = static_cast<double>(misses) / n;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_binom_cdf(misses, n, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12) break;
  }
  return hi;
}

double abs_quantile(std::vector<double> samples, double coverage) {
  if (samples.empty()) return 0.0;
  for (double& s : samples) s = std::fabs(s);
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  auto rank = static_cast<std::size_t>(std::ceil(coverage * n));
  rank = std::min(std::max<std::size_t>(rank, 1), samples.size());
  return samples[rank - 1];
}

std::optional<double> ConfidenceModel::service_miss_upper(char direction,
                                                          const ClassKey& key) const {
  const std::map<ClassKey, ServiceBound>* table = nullptr;
  switch (direction_rank(direction)) {
    case 0: table = &uplink; break;
    case 1: table = &downlink; break;
    default: table = &bidir; break;
  }
  // Walk down from the requested bucket to strictly worse ones; bounds are
  // monotone non-increasing in the bucket index, so any hit is conservative.
  for (int b = key.snr_bucket; b >= 0; --b) {
    ClassKey probe = key;
    probe.snr_bucket = b;
    const auto it = table->find(probe);
    if (it != table->end()) return it->second.miss_upper;
  }
  return std::nullopt;
}

std::optional<ChainParams> ConfidenceModel::chain_params(const ClassKey& key) const {
  for (int b = key.snr_bucket; b >= 0; --b) {
    ClassKey probe = key;
    probe.snr_bucket = b;
    const auto it = chains.find(probe);
    if (it != chains.end()) {
      ChainParams cp;
      cp.mu1 = it->second.mu1_upper;
      cp.p11 = it->second.p11_upper;
      return cp;
    }
  }
  return std::nullopt;
}

ConfidenceModel calibrate(const std::vector<CalibrationRecord>& records,
                          double beta, int min_records) {
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("beta must lie in (0,1)");
  ConfidenceModel model;
  model.beta = beta;
  model.min_records = min_records;

  struct Tally {
    int n = 0;
    int miss = 0;
  };
  std::map<ClassKey, Tally> tally[3];

  // Chain statistics need the per-(seed, loop) opportunity sequence of the
  // bidirectional outcome, in cycle order, remembering which class was
  // served at each opportunity.
  struct ChainObs {
    int cycle = 0;
    bool met = false;
    ClassKey key;
    bool operator<(const ChainObs& o) const { return cycle < o.cycle; }
  };
  std::map<std::pair<std::uint64_t, int>, std::vector<ChainObs>> sequences;

  std::vector<double> residuals;
  for (const auto& r : records) {
    auto& t = tally[direction_rank(r.direction)][r.key];
    t.n += 1;
    if (!r.deadline_met) t.miss += 1;
    residuals.push_back(r.predicted_snr_db - r.realized_snr_db);
    if (r.direction == 'b') {
      sequences[{r.seed, r.loop}].push_back({r.cycle, r.deadline_met, r.key});
    }
  }

  // Only optimistic predictions (predicted above realized) threaten the
  // certificate; penalize exactly that tail.
  std::vector<double> optimistic;
  for (double d : residuals)
    if (d > 0.0) optimistic.push_back(d);
  model.residual_count = static_cast<int>(residuals.size());
  if (!optimistic.empty() && static_cast<int>(residuals.size()) >= min_records) {
    std::sort(optimistic.begin(), optimistic.end());
    const double cov = 1.0 - beta;
    const auto n = static_cast<double>(residuals.size());
    auto rank = static_cast<std::size_t>(std::ceil(cov * n));
    // Rank is taken over all residuals; non-positive ones occupy the low
    // ranks implicitly.
    const std::size_t zeros = residuals.size() - optimistic.size();
    if (rank <= zeros) {
      model.snr_margin_db = 0.0;
    } else {
      model.snr_margin_db = optimistic[std::min(rank - zeros, optimistic.size()) - 1];
    }
  }

  const double conf = 1.0 - beta;
  auto emit = [&](int dir, std::map<ClassKey, ServiceBound>& out) {
    for (const auto& [key, t] : tally[dir]) {
      if (t.n < min_records) continue;
      ServiceBound b;
      b.records = t.n;
      b.misses = t.miss;
      b.miss_upper = clopper_pearson_upper(t.miss, t.n, conf);
      out.emplace(key, b);
    }
  };
  emit(0, model.uplink);
  emit(1, model.downlink);
  emit(2, model.bidir);

  // Chain bounds per bidirectional class: window starts estimate the
  // stationary failure mass, consecutive-cycle transitions after a miss
  // estimate persistence.  Each observation counts toward the class served
  // at that opportunity (a loop changes class as geometry drifts).
  std::map<ClassKey, ChainBound> chain;
  for (auto& [id, seq] : sequences) {
    std::sort(seq.begin(), seq.end());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      auto& c = chain[seq[i].key];
      c.starts += 1;
      if (!seq[i].met) c.start_misses += 1;
      if (i + 1 < seq.size() && !seq[i].met &&
          seq[i + 1].cycle == seq[i].cycle + 1) {
        c.fail_steps += 1;
        if (!seq[i + 1].met) c.fail_repeats += 1;
      }
    }
  }
  for (auto& [key, c] : chain) {
    if (c.starts < min_records) continue;
    c.mu1_upper = clopper_pearson_upper(c.start_misses, c.starts, conf);
    c.p11_upper = (c.fail_steps > 0)
                      ? clopper_pearson_upper(c.fail_repeats, c.fail_steps, conf)
                      : clopper_pearson_upper(0, c.starts, conf);
    model.chains.emplace(key, c);
  }

  auto get_miss = [](const ServiceBound& b) { return b.miss_upper; };
  auto set_miss = [](ServiceBound& b, double v) { b.miss_upper = v; };
  monotonize(model.uplink, get_miss, set_miss);
  monotonize(model.downlink, get_miss, set_miss);
  monotonize(model.bidir, get_miss, set_miss);
  monotonize(
      model.chains, [](const ChainBound& c) { return c.mu1_upper; },
      [](ChainBound& c, double v) { c.mu1_upper = v; });
  monotonize(
      model.chains, [](const ChainBound& c) { return c.p11_upper; },
      [](ChainBound& c, double v) { c.p11_upper = v; });
  return model;
}

double margin_violation_rate(const ConfidenceModel& model,
                             const std::vector<CalibrationRecord>& records) {
  if (records.empty()) return 0.0;
  int bad = 0;
  for (const auto& r : records) {
    if (r.predicted_snr_db - r.realized_snr_db > model.snr_margin_db) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(records.size());
}

void ConfidenceModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "beta " << beta << "\n";
  out << "min_records " << min_records << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", snr_margin_db);
  out << "snr_margin_db " << buf << "\n";
  out << "residual_count " << residual_count << "\n";
  auto dump = [&out, &buf](const char* tag, const std::map<ClassKey, ServiceBound>& m) {
    for (const auto& [key, b] : m) {
      std::snprintf(buf, sizeof(buf), "%.9f", b.miss_upper);
      out << tag << ' ' << key.str() << ' ' << b.records << ' ' << b.misses
          << ' ' << buf << "\n";
    }
  };
  dump("ul", uplink);
  dump("dl", downlink);
  dump("bi", bidir);
  for (const auto& [key, c] : chains) {
    out << "chain " << key.str() << ' ' << c.starts << ' ' << c.start_misses
        << ' ' << c.fail_steps << ' ' << c.fail_repeats;
    std::snprintf(buf, sizeof(buf), " %.9f", c.mu1_upper);
    out << buf;
    std::snprintf(buf, sizeof(buf), " %.9f", c.p11_upper);
    out << buf << "\n";
  }
}

ConfidenceModel ConfidenceModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ConfidenceModel m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "beta") {
      ls >> m.beta;
    } else if (tag == "min_records") {
      ls >> m.min_records;
    } else if (tag == "snr_margin_db") {
      ls >> m.snr_margin_db;
    } else if (tag == "residual_count") {
      ls >> m.residual_count;
    } else if (tag == "ul" || tag == "dl" || tag == "bi") {
      std::string key;
      ServiceBound b;
      ls >> key >> b.records >> b.misses >> b.miss_upper;
      auto& table = (tag == "ul") ? m.uplink : (tag == "dl") ? m.downlink : m.bidir;
      table.emplace(ClassKey::parse(key), b);
    } else if (tag == "chain") {
      std::string key;
      ChainBound c;
      ls >> key >> c.starts >> c.start_misses >> c.fail_steps >> c.fail_repeats >>
          c.mu1_upper >> c.p11_upper;
      m.chains.emplace(ClassKey::parse(key), c);
    } else {
      throw std::runtime_error("unknown model line: " + line);
    }
    if (!ls) throw std::runtime_error("malformed model line: " + line);
  }
  return m;
}

}  // namespace certsched
