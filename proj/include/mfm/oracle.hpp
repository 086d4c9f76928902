// Configuration-space enumeration used as an independent check of the
// count-vector recursion. Cost is q^n, so only tiny volumes are feasible.
#pragma once

#include "mfm/gibbs.hpp"
#include "mfm/meanfield.hpp"

#include <map>
#include <vector>

namespace mfm::oracle {

struct EnumeratedLaw {
  std::map<std::vector<int>, double> probability;  // by total count vector K
  double log_partition = 0.0;
};

// Sums prod_i alpha[eta_i](sigma_i) exp(-n F(L_n(sigma))) over all q^n spin
// configurations. Throws VolumeTooLarge beyond max_configurations.
EnumeratedLaw enumerate_counts(const meanfield::ModelSpec& model, const gibbs::DisorderString& eta,
                               long long max_configurations = 50'000'000);

// Law of the last spin given that L_n lies in the neighborhood.
SimplexVector enumerate_last_site(const meanfield::ModelSpec& model, const gibbs::DisorderString& eta,
                                  const gibbs::NeighborhoodSpec& spec);

// Total-variation distance between the recursion and the enumeration.
double total_variation(const gibbs::CountDistribution& dist, const EnumeratedLaw& law);

}  // namespace mfm::oracle
