#include "puppetscan/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "puppetscan/signals.hpp"

namespace puppetscan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return r;
}

}  // namespace

bool BehaviorFeatures::any_present() const {
  return std::any_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
}

BehaviorFeatures extract_features(const ParticipantRecord& record) {
  BehaviorFeatures f;

  // Keystrokes: intervals never span sessions or typing pauses.
  std::vector<double> intervals;
  double typing_span_ms = 0.0;
  // Pointer samples: clicks carrying coordinates.
  double path = 0.0;
  double pointer_span_ms = 0.0;
  double idle_ms = 0.0;
  std::size_t pointer_samples = 0;
  int ups = 0;
  int downs = 0;

  struct Last {
    std::optional<std::int64_t> key_t;
    std::optional<std::int64_t> ptr_t;
    double x = 0.0;
    double y = 0.0;
  };
  std::map<int, Last> last;

  for (const auto& ev : record.events) {
    auto& l = last[ev.session];
    switch (ev.kind) {
      case EventKind::keydown:
        if (l.key_t) {
          const auto gap = static_cast<double>(ev.t_ms - *l.key_t);
          if (gap <= kTypingPauseMs) {
            intervals.push_back(gap);
            typing_span_ms += gap;
          }
        }
        l.key_t = ev.t_ms;
        break;
      case EventKind::click:
        if (ev.payload.contains("x") && ev.payload.contains("y")) {
          const double x = ev.payload["x"].get<double>();
          const double y = ev.payload["y"].get<double>();
          ++pointer_samples;
          if (l.ptr_t) {
            const double gap = static_cast<double>(ev.t_ms - *l.ptr_t);
            path += std::hypot(x - l.x, y - l.y);
            pointer_span_ms += gap;
            if (gap > kMouseIdleGapMs) idle_ms += gap;
          }
          l.ptr_t = ev.t_ms;
          l.x = x;
          l.y = y;
        }
        break;
      case EventKind::scroll_up: ++ups; break;
      case EventKind::scroll_down: ++downs; break;
      default: break;
    }
  }

  if (!intervals.empty()) {
    const auto ms = mean_std(intervals);
    f[feature::keystroke_interval_mean_ms] = ms.mean;
    f[feature::keystroke_interval_std_ms] = ms.std;
    if (typing_span_ms > 0.0)
      f[feature::typing_speed_cps] = static_cast<double>(intervals.size()) / (typing_span_ms / 1000.0);
  }
  if (pointer_samples >= 2) {
    f[feature::mouse_path_length_px] = path;
    if (pointer_span_ms > 0.0) {
      f[feature::mouse_mean_speed_px_s] = path / (pointer_span_ms / 1000.0);
      f[feature::mouse_idle_ratio] = idle_ms / pointer_span_ms;
    }
  }
  if (ups + downs > 0) {
    f[feature::scroll_up_count] = ups;
    f[feature::scroll_down_count] = downs;
  }
  if (const auto prof = timing_profile(record)) {
    f[feature::response_time_mean_ms] = prof->mean_ms;
    f[feature::response_time_cv] = prof->cv;
  }
  return f;
}

std::vector<LabeledFeatures> extract_all_features(const Dataset& dataset) {
  std::vector<LabeledFeatures> out;
  out.reserve(dataset.size());
  for (const auto& rec : dataset) out.push_back({rec.participant_id, extract_features(rec)});
  return out;
}

ClusterProposal cluster_behaviors(std::span<const LabeledFeatures> input, double distance_threshold) {
  ClusterProposal proposal;
  proposal.distance_threshold = distance_threshold;
  if (std::none_of(input.begin(), input.end(), [](const auto& r) { return r.features.any_present(); }))
    throw std::domain_error("cluster_behaviors: no record has any behavioral feature");

  // Canonical order by id makes every later step independent of input order.
  std::vector<const LabeledFeatures*> recs;
  for (const auto& r : input) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(),
            [](const auto* a, const auto* b) { return a->participant_id < b->participant_id; });
  const std::size_t n = recs.size();
  if (n < 2) return proposal;

  // z-score each column over the records that have it; a constant column maps to 0.
  constexpr std::size_t F = BehaviorFeatures::kCount;
  std::vector<std::array<std::optional<double>, F>> z(n);
  for (std::size_t c = 0; c < F; ++c) {
    std::vector<double> col;
    for (const auto* r : recs)
      if (r->features[c]) col.push_back(*r->features[c]);
    if (col.empty()) continue;
    const auto ms = mean_std(col);
    for (std::size_t i = 0; i < n; ++i)
      if (recs[i]->features[c]) z[i][c] = ms.std > 0.0 ? (*recs[i]->features[c] - ms.mean) / ms.std : 0.0;
  }

  std::vector<double> dist(n * n, kInf);
  auto d = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double ss = 0.0;
      int shared = 0;
      for (std::size_t c = 0; c < F; ++c)
        if (z[i][c] && z[j][c]) {
          const double diff = *z[i][c] - *z[j][c];
          ss += diff * diff;
          ++shared;
        }
      d(i, j) = d(j, i) = shared > 0 ? std::sqrt(ss / shared) : kInf;
    }

  // Clusters are named by their smallest member index.
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  // Cached nearest later neighbour per row; ties resolve to the smaller index.
  std::vector<std::size_t> nn(n, n);
  auto refresh = [&](std::size_t i) {
    nn[i] = n;
    for (std::size_t j = i + 1; j < n; ++j)
      if (active[j] && (nn[i] == n || d(i, j) < d(i, nn[i]))) nn[i] = j;
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  while (true) {
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == n) continue;
      if (best_i == n || d(i, nn[i]) < d(best_i, nn[best_i])) best_i = i;
    }
    if (best_i == n) break;
    const std::size_t a = best_i;
    const std::size_t b = nn[a];
    const double dab = d(a, b);
    if (!(dab <= distance_threshold)) break;

    proposal.linkage_distances.push_back(dab);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double merged = (static_cast<double>(size[a]) * d(k, a) + static_cast<double>(size[b]) * d(k, b)) /
                            static_cast<double>(size[a] + size[b]);
      d(k, a) = d(a, k) = merged;
    }
    size[a] += size[b];
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    active[b] = false;

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k]) continue;
      if (k == a || nn[k] == a || nn[k] == b || nn[k] == n) {
        refresh(k);
      } else if (k < a && (d(k, a) < d(k, nn[k]) || (d(k, a) == d(k, nn[k]) && a < nn[k]))) {
        nn[k] = a;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i] || members[i].size() < 2) continue;
    std::vector<std::string> ids;
    for (auto m : members[i]) ids.push_back(recs[m]->participant_id);
    std::sort(ids.begin(), ids.end());
    proposal.groups.push_back(std::move(ids));
  }
  std::sort(proposal.groups.begin(), proposal.groups.end());
  return proposal;
}

void write_features_csv(std::ostream& out, std::span<const LabeledFeatures> records) {
  out << "participant_id";
  for (auto name : BehaviorFeatures::kNames) out << ',' << name;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& r : records) {
    out << r.participant_id;
    for (const auto& v : r.features.values) {
      out << ',';
      if (v) out << *v;
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace puppetscan
