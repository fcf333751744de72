#ifndef GRIDSITING_RANDOM_H_
#define GRIDSITING_RANDOM_H_

#include <cstdint>
#include <random>

namespace gridsiting {

// Standard normal CDF.
double normal_cdf(double x);
// Upper tail 1 - normal_cdf(x), accurate for large x.
double normal_sf(double x);
// Inverse standard normal CDF for p in (0,1) (Wichura AS241, ~1e-16 relative).
double normal_quantile(double p);

// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x);

// Random stream keyed by (seed, index). Every scenario draws from its own
// stream, so results do not depend on generation order or thread count.
// Only the fully specified mt19937_64 engine is used; the uniform and normal
// transforms are implemented here so output is identical across standard
// library implementations.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t index);

  // Uniform on the open interval (0,1).
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Draws from N(mu, sigma^2) restricted to [lo, hi] by inverting the CDF.
// Either bound may be infinite. Throws DegenerateIntervalError when the
// interval carries no representable probability mass.
double sample_truncated_normal(double mu, double sigma, double lo, double hi,
                               RandomStream& rng);

}  // namespace gridsiting

#endif  // GRIDSITING_RANDOM_H_
