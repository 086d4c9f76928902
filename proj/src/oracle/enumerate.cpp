#include "mfm/oracle.hpp"

#include <cmath>

namespace mfm::oracle {

namespace {

// Visits every configuration as an odometer over spins, passing the log
// a-priori weight and the count vector.
template <typename Fn>
void for_each_configuration(const meanfield::ModelSpec& model, const gibbs::DisorderString& eta,
                            long long max_configurations, Fn&& fn) {
  const int n = eta.length();
  const int q = model.spin_size();
  if (std::pow(static_cast<double>(q), n) > static_cast<double>(max_configurations))
    throw Error(ErrorCode::VolumeTooLarge, "too many configurations to enumerate");
  std::vector<int> sigma(n, 0);
  std::vector<int> k(q, 0);
  k[0] = n;
  for (;;) {
    double log_w = 0.0;
    for (int i = 0; i < n; ++i) log_w += std::log(model.alpha(eta[i])[sigma[i]]);
    fn(sigma, k, log_w);
    int i = 0;
    while (i < n) {
      --k[sigma[i]];
      if (++sigma[i] < q) {
        ++k[sigma[i]];
        break;
      }
      sigma[i] = 0;
      ++k[0];
      ++i;
    }
    if (i == n) return;
  }
}

double log_tilt(const meanfield::ModelSpec& model, const std::vector<int>& k, int n) {
  Vector frac(k.size());
  for (std::size_t a = 0; a < k.size(); ++a) frac[static_cast<Eigen::Index>(a)] = static_cast<double>(k[a]) / n;
  return -n * model.energy(frac);
}

}  // namespace

EnumeratedLaw enumerate_counts(const meanfield::ModelSpec& model, const gibbs::DisorderString& eta,
                               long long max_configurations) {
  const int n = eta.length();
  std::map<std::vector<int>, std::vector<double>> terms;
  for_each_configuration(model, eta, max_configurations,
                         [&](const std::vector<int>&, const std::vector<int>& k, double log_w) {
                           terms[k].push_back(log_w + log_tilt(model, k, n));
                         });
  std::map<std::vector<int>, double> log_mass;
  std::vector<double> all;
  for (const auto& [k, ts] : terms) {
    log_mass[k] = log_sum_exp(ts);
    all.push_back(log_mass[k]);
  }
  EnumeratedLaw law;
  law.log_partition = log_sum_exp(all);
  for (const auto& [k, lm] : log_mass) law.probability[k] = std::exp(lm - law.log_partition);
  return law;
}

SimplexVector enumerate_last_site(const meanfield::ModelSpec& model, const gibbs::DisorderString& eta,
                                  const gibbs::NeighborhoodSpec& spec) {
  const int n = eta.length();
  const int q = model.spin_size();
  std::vector<std::vector<double>> terms(q);
  for_each_configuration(model, eta, 50'000'000,
                         [&](const std::vector<int>& sigma, const std::vector<int>& k, double log_w) {
                           if (gibbs::in_neighborhood(k, n, spec))
                             terms[sigma[n - 1]].push_back(log_w + log_tilt(model, k, n));
                         });
  Vector logw(q);
  for (int a = 0; a < q; ++a) logw[a] = log_sum_exp(terms[a]);
  if (!std::isfinite(logw.maxCoeff())) throw Error(ErrorCode::ZeroMass, "neighborhood has no mass");
  return SimplexVector::normalized(softmax(logw));
}

double total_variation(const gibbs::CountDistribution& dist, const EnumeratedLaw& law) {
  double tv = 0.0;
  double covered = 0.0;
  for (const auto& [k, p] : law.probability) {
    const double r = dist.probability(k);
    tv += std::abs(r - p);
    covered += r;
  }
  // Mass the recursion puts on count vectors the enumeration never reached.
  tv += std::abs(1.0 - covered);
  return 0.5 * tv;
}

}  // namespace mfm::oracle
