#include "dare/synth.hpp"

#include <cmath>
#include <random>
#include <string>

namespace dare {

namespace {

std::uint64_t splitmix(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kAbility = 1, kDifficulty, kPrecision, kAnswer, kCell };

std::string padded(char prefix, int index, int count) {
    const int width = static_cast<int>(std::to_string(std::max(count - 1, 0)).size());
    std::string n = std::to_string(index);
    return prefix + std::string(width - static_cast<int>(n.size()), '0') + n;
}

}  // namespace

KeyedRng::KeyedRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t i, std::uint64_t j) {
    std::uint64_t x = seed;
    std::uint64_t h = splitmix(x);
    for (std::uint64_t part : {stream, i, j}) {
        x = h ^ part;
        h = splitmix(x);
    }
    state_ = h;
}

KeyedRng::result_type KeyedRng::operator()() { return splitmix(state_); }

double KeyedRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

void SynthConfig::check() const {
    std::vector<std::string> v;
    if (num_participants < 1 || num_questions < 1) v.emplace_back("synth: counts must be positive");
    if (num_options < 2) v.emplace_back("synth: num_options must be >= 2");
    if (!(response_density > 0.0 && response_density <= 1.0)) v.emplace_back("synth: density must be in (0, 1]");
    if (!v.empty()) throw ValidationError(std::move(v));
    priors.check();
}

SynthResult sample(const SynthConfig& cfg) {
    cfg.check();
    SynthResult out;
    for (int q = 0; q < cfg.num_questions; ++q)
        out.data.add_question({padded('q', q, cfg.num_questions), cfg.num_options, std::nullopt, {}});
    for (int p = 0; p < cfg.num_participants; ++p) out.data.participants.push_back(padded('p', p, cfg.num_participants));

    for (int p = 0; p < cfg.num_participants; ++p) {
        KeyedRng rng(cfg.seed, kAbility, p);
        std::normal_distribution<double> n(cfg.priors.ability.mean(), cfg.priors.ability.stddev());
        out.abilities.push_back(n(rng));
    }
    for (int q = 0; q < cfg.num_questions; ++q) {
        KeyedRng rd(cfg.seed, kDifficulty, q);
        std::normal_distribution<double> n(cfg.priors.difficulty.mean(), cfg.priors.difficulty.stddev());
        out.difficulties.push_back(n(rd));

        if (cfg.priors.discrimination == DiscriminationMode::Fixed) {
            out.precisions.push_back(cfg.priors.fixed_precision);
        } else {
            KeyedRng rt(cfg.seed, kPrecision, q);
            std::gamma_distribution<double> g(cfg.priors.precision.shape(), cfg.priors.precision.scale());
            out.precisions.push_back(g(rt));
        }

        KeyedRng ry(cfg.seed, kAnswer, q);
        std::uniform_int_distribution<int> u(0, cfg.num_options - 1);
        out.gold[q] = u(ry);
    }

    for (int p = 0; p < cfg.num_participants; ++p) {
        for (int q = 0; q < cfg.num_questions; ++q) {
            KeyedRng rc(cfg.seed, kCell, p, q);
            const double u_observe = rc.uniform();
            const double u_correct = rc.uniform();
            std::uniform_int_distribution<int> guess(0, cfg.num_options - 1);
            const int random_response = guess(rc);
            if (u_observe >= cfg.response_density) continue;
            const double pc = std_normal_cdf(std::sqrt(out.precisions[q]) * (out.abilities[p] - out.difficulties[q]));
            const int response = u_correct < pc ? out.gold[q] : random_response;
            out.data.records.push_back({static_cast<std::size_t>(p), static_cast<std::size_t>(q), response});
        }
    }
    return out;
}

}  // namespace dare
