#pragma once

#include "dare/model.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace dare {

/// Counter-based generator: the stream is a pure function of its key, so
/// any cell can be sampled independently of every other.
class KeyedRng {
public:
    using result_type = std::uint64_t;

    KeyedRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t i = 0, std::uint64_t j = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();
    double uniform();  ///< in [0, 1)

private:
    std::uint64_t state_;
};

struct SynthConfig {
    int num_participants = 120;
    int num_questions = 60;
    int num_options = 8;
    PriorSpec priors;
    std::uint64_t seed = 1;
    double response_density = 1.0;

    void check() const;
};

struct SynthResult {
    ResponseDataset data;
    GoldSet gold;  ///< total
    std::vector<double> abilities;
    std::vector<double> difficulties;
    std::vector<double> precisions;
};

/// Draws a dataset from the generative model: abilities, difficulties and
/// precisions from their priors, a uniform correct answer per question, and
/// per cell c ~ Bernoulli(Phi(sqrt(tau)(a - d))), r = y if c else uniform.
SynthResult sample(const SynthConfig& config);

}  // namespace dare
