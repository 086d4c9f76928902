#include "mfm/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace mfm::gibbs {

namespace {

// Linear-space accumulation needs the extended exponent range: a block
// weight such as 0.1^400 is below the double range.
static_assert(std::numeric_limits<long double>::max_exponent10 >= 4000,
              "count convolution needs an extended-range long double");

const double kLogTiny = std::log(1e-300);

// Calls fn(k) for each composition of `total` into `parts` nonnegative parts.
void for_each_composition(int total, int parts, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> k(parts, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == parts - 1) {
      k[pos] = left;
      fn(k);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      k[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  if (parts == 0) return;
  rec(0, total);
}

}  // namespace

DisorderString::DisorderString(std::vector<int> symbols, int alphabet_size)
    : symbols_(std::move(symbols)), alphabet_(alphabet_size) {
  if (alphabet_ < 1) throw Error(ErrorCode::InvalidArgument, "disorder alphabet must be nonempty");
  for (int s : symbols_)
    if (s < 0 || s >= alphabet_) throw Error(ErrorCode::InvalidArgument, "disorder symbol out of range");
}

std::vector<int> DisorderString::counts() const {
  std::vector<int> c(alphabet_, 0);
  for (int s : symbols_) ++c[s];
  return c;
}

CountTable::CountTable(int volume, int spins) : n_(volume), q_(spins) {
  if (n_ < 0 || q_ < 1) throw Error(ErrorCode::InvalidArgument, "count table needs n >= 0 and q >= 1");
  std::size_t cells = 1;
  for (int i = 0; i + 1 < q_; ++i) cells *= static_cast<std::size_t>(n_ + 1);
  values_.assign(cells, kNegInf);
}

std::size_t CountTable::index(std::span<const int> k) const {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int i = 0; i + 1 < q_; ++i) {
    idx += static_cast<std::size_t>(k[i]) * stride;
    stride *= static_cast<std::size_t>(n_ + 1);
  }
  return idx;
}

bool CountTable::decode(std::size_t index, std::vector<int>& k) const {
  k.resize(q_);
  int used = 0;
  for (int i = 0; i + 1 < q_; ++i) {
    k[i] = static_cast<int>(index % static_cast<std::size_t>(n_ + 1));
    index /= static_cast<std::size_t>(n_ + 1);
    used += k[i];
  }
  if (used > n_) return false;
  k[q_ - 1] = n_ - used;
  return true;
}

CountTable log_count_prior(const meanfield::ModelSpec& model, const std::vector<int>& type_counts,
                           const VolumeLimits& limits) {
  const int q = model.spin_size();
  if (static_cast<int>(type_counts.size()) != model.disorder_size())
    throw Error(ErrorCode::InvalidArgument, "type counts do not match the disorder alphabet");
  int n = 0;
  for (int c : type_counts) {
    if (c < 0) throw Error(ErrorCode::InvalidArgument, "negative type count");
    n += c;
  }
  double cells = 1.0;
  for (int i = 0; i + 1 < q; ++i) cells *= n + 1.0;
  if (n > limits.max_volume || cells > static_cast<double>(limits.max_cells)) {
    std::ostringstream os;
    os << "volume " << n << " exceeds the exact-enumeration cap (" << limits.max_volume << ")";
    throw Error(ErrorCode::VolumeTooLarge, os.str());
  }

  CountTable table(n, q);
  std::vector<long double> acc(table.cells(), 0.0L);
  acc[0] = 1.0L;
  int done = 0;
  std::vector<std::pair<std::size_t, long double>> block;
  std::vector<std::size_t> support;
  for (int b = 0; b < model.disorder_size(); ++b) {
    const int nb = type_counts[b];
    if (nb == 0) continue;
    std::vector<long double> log_alpha(q);
    for (int a = 0; a < q; ++a) log_alpha[a] = std::log(static_cast<long double>(model.alpha(b)[a]));
    block.clear();
    const long double log_fact = std::lgamma(static_cast<long double>(nb) + 1.0L);
    for_each_composition(nb, q, [&](const std::vector<int>& k) {
      long double lw = log_fact;
      for (int a = 0; a < q; ++a) lw += k[a] * log_alpha[a] - std::lgamma(static_cast<long double>(k[a]) + 1.0L);
      block.emplace_back(table.index(k), std::exp(lw));
    });
    support.clear();
    for_each_composition(done, q, [&](const std::vector<int>& k) { support.push_back(table.index(k)); });

    std::vector<long double> next(table.cells(), 0.0L);
    for (std::size_t ia : support) {
      const long double va = acc[ia];
      if (va == 0.0L) continue;
      for (const auto& [ib, vb] : block) next[ia + ib] += va * vb;
    }
    acc.swap(next);
    done += nb;
  }

  auto& out = table.values();
  std::vector<int> k;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (acc[i] > 0.0L && table.decode(i, k)) out[i] = static_cast<double>(std::log(acc[i]));
  return table;
}

CountDistribution::CountDistribution(CountTable log_prob, double log_partition)
    : table_(std::move(log_prob)), log_z_(log_partition) {}

double CountDistribution::log_probability(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != spins()) throw Error(ErrorCode::InvalidArgument, "count vector has wrong size");
  int total = 0;
  for (int c : k) {
    if (c < 0) return kNegInf;
    total += c;
  }
  if (total != volume()) return kNegInf;
  return table_.values()[table_.index(k)];
}

double CountDistribution::probability(std::span<const int> k) const { return std::exp(log_probability(k)); }

CountDistribution tilt(const meanfield::ModelSpec& model, const CountTable& log_prior) {
  const int n = log_prior.volume();
  const int q = log_prior.spins();
  CountTable table(n, q);
  auto& out = table.values();
  const auto& in = log_prior.values();
  std::vector<int> k;
  Vector frac(q);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == kNegInf || !log_prior.decode(i, k)) continue;
    for (int a = 0; a < q; ++a) frac[a] = n == 0 ? 0.0 : static_cast<double>(k[a]) / n;
    out[i] = in[i] - n * model.energy(frac);
  }
  const double log_z = log_sum_exp(out);
  for (double& v : out)
    if (v != kNegInf) v -= log_z;
  return CountDistribution(std::move(table), log_z);
}

CountDistribution count_distribution(const meanfield::ModelSpec& model, const DisorderString& eta,
                                     const VolumeLimits& limits) {
  if (eta.alphabet_size() != model.disorder_size())
    throw Error(ErrorCode::InvalidArgument, "disorder string alphabet does not match the model");
  return tilt(model, log_count_prior(model, eta.counts(), limits));
}

double default_radius(const std::vector<SimplexVector>& totals) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < totals.size(); ++i)
    for (std::size_t j = i + 1; j < totals.size(); ++j)
      best = std::min(best, (totals[i].vec() - totals[j].vec()).lpNorm<1>());
  if (!std::isfinite(best) || best <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "default radius needs at least two distinct totals");
  return 0.4 * best;
}

bool in_neighborhood(std::span<const int> k, int n, const NeighborhoodSpec& spec) {
  double dist = 0.0;
  for (int a = 0; a < static_cast<int>(k.size()); ++a) dist += std::abs(static_cast<double>(k[a]) / n - spec.center[a]);
  return dist <= spec.radius + 1e-12;
}

double log_neighborhood_mass(const CountDistribution& dist, const NeighborhoodSpec& spec) {
  if (spec.center.size() != dist.spins()) throw Error(ErrorCode::InvalidArgument, "neighborhood center has wrong size");
  std::vector<double> terms;
  dist.for_each([&](const std::vector<int>& k, double lp) {
    if (in_neighborhood(k, dist.volume(), spec)) terms.push_back(lp);
  });
  return log_sum_exp(terms);
}

double neighborhood_mass(const CountDistribution& dist, const NeighborhoodSpec& spec) {
  return std::min(1.0, std::exp(log_neighborhood_mass(dist, spec)));
}

double gibbs_ratio(const CountDistribution& dist, const SimplexVector& center1, const SimplexVector& center2,
                   double radius) {
  const double num = log_neighborhood_mass(dist, NeighborhoodSpec{center1, radius});
  const double den = log_neighborhood_mass(dist, NeighborhoodSpec{center2, radius});
  if (!(den >= kLogTiny)) throw Error(ErrorCode::ZeroMass, "reference neighborhood has no mass");
  return std::exp(num - den);
}

double gibbs_ratio(const meanfield::ModelSpec& model, const DisorderString& eta, const SimplexVector& center1,
                   const SimplexVector& center2, double radius) {
  return gibbs_ratio(count_distribution(model, eta), center1, center2, radius);
}

SimplexVector site_marginals_conditional(const meanfield::ModelSpec& model, const CountTable& log_prior_rest,
                                         int last_symbol, const NeighborhoodSpec& spec) {
  const int q = model.spin_size();
  if (log_prior_rest.spins() != q) throw Error(ErrorCode::InvalidArgument, "prior table has wrong spin count");
  if (last_symbol < 0 || last_symbol >= model.disorder_size())
    throw Error(ErrorCode::InvalidArgument, "disorder symbol out of range");
  const int n = log_prior_rest.volume() + 1;
  std::vector<std::vector<double>> terms(q);
  std::vector<int> rest;
  std::vector<int> k(q);
  Vector frac(q);
  const auto& in = log_prior_rest.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == kNegInf || !log_prior_rest.decode(i, rest)) continue;
    for (int a = 0; a < q; ++a) {
      std::copy(rest.begin(), rest.end(), k.begin());
      ++k[a];
      if (!in_neighborhood(k, n, spec)) continue;
      for (int c = 0; c < q; ++c) frac[c] = static_cast<double>(k[c]) / n;
      terms[a].push_back(in[i] + std::log(model.alpha(last_symbol)[a]) - n * model.energy(frac));
    }
  }
  Vector logw(q);
  for (int a = 0; a < q; ++a) logw[a] = log_sum_exp(terms[a]);
  const double total = log_sum_exp(std::span<const double>(logw.data(), static_cast<std::size_t>(q)));
  if (!(total >= kLogTiny)) throw Error(ErrorCode::ZeroMass, "conditioning neighborhood has no mass");
  return SimplexVector::normalized(softmax(logw));
}

SimplexVector site_marginals_conditional(const meanfield::ModelSpec& model, const DisorderString& eta,
                                         const NeighborhoodSpec& spec, const VolumeLimits& limits) {
  if (eta.length() < 1) throw Error(ErrorCode::InvalidArgument, "empty disorder string");
  std::vector<int> rest = eta.counts();
  const int last = eta[eta.length() - 1];
  --rest[last];
  return site_marginals_conditional(model, log_count_prior(model, rest, limits), last, spec);
}

double site_marginal_conditional(const meanfield::ModelSpec& model, const DisorderString& eta, int spin,
                                 const NeighborhoodSpec& spec, const VolumeLimits& limits) {
  if (spin < 0 || spin >= model.spin_size()) throw Error(ErrorCode::InvalidArgument, "spin out of range");
  return site_marginals_conditional(model, eta, spec, limits)[spin];
}

PriorCache::PriorCache(meanfield::ModelSpec model, VolumeLimits limits)
    : model_(std::move(model)), limits_(limits) {}

std::shared_ptr<const CountTable> PriorCache::prior(const std::vector<int>& type_counts) {
  {
    std::lock_guard lock(mutex_);
    auto it = priors_.find(type_counts);
    if (it != priors_.end()) return it->second;
  }
  auto made = std::make_shared<const CountTable>(log_count_prior(model_, type_counts, limits_));
  std::lock_guard lock(mutex_);
  return priors_.emplace(type_counts, std::move(made)).first->second;
}

std::shared_ptr<const CountDistribution> PriorCache::distribution(const std::vector<int>& type_counts) {
  {
    std::lock_guard lock(mutex_);
    auto it = dists_.find(type_counts);
    if (it != dists_.end()) return it->second;
  }
  auto made = std::make_shared<const CountDistribution>(tilt(model_, *prior(type_counts)));
  std::lock_guard lock(mutex_);
  return dists_.emplace(type_counts, std::move(made)).first->second;
}

std::size_t PriorCache::size() const {
  std::lock_guard lock(mutex_);
  return priors_.size();
}

}  // namespace mfm::gibbs
