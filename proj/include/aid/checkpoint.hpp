#ifndef AID_CHECKPOINT_HPP
#define AID_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "aid/actor_critic.hpp"
#include "aid/config.hpp"
#include "aid/net.hpp"

namespace aid {

// Versioned binary checkpoint: magic, version, both net specs, policy
// scalars, seed and config hash, then the flat parameter and optimizer
// arrays as little-endian 64-bit values. x86-64 is little-endian, so raw
// writes of the in-memory representation meet the format.
inline constexpr char kCheckpointMagic[8] = {'G', 'D', 'M', 'O', 'D', 'V', '0', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
}

inline void write_vec(std::ostream& out, const Vec& v) {
    write_pod(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline void read_vec(std::istream& in, Vec& v) {
    std::uint64_t n = 0;
    read_pod(in, n);
    v.resize(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
}

inline void write_spec(std::ostream& out, const NetSpec& s) {
    write_pod(out, static_cast<std::int32_t>(s.state_dim));
    write_pod(out, static_cast<std::int32_t>(s.time_embed_width));
    write_pod(out, static_cast<std::int32_t>(s.stem_width));
    write_pod(out, static_cast<std::int32_t>(s.stem_blocks));
    write_pod(out, static_cast<std::int32_t>(s.trunk_width));
    write_pod(out, static_cast<std::int32_t>(s.trunk_blocks));
    write_pod(out, static_cast<std::int32_t>(s.head == HeadKind::vector ? 0 : 1));
}

inline void read_spec(std::istream& in, NetSpec& s) {
    std::int32_t v = 0;
    read_pod(in, v); s.state_dim = v;
    read_pod(in, v); s.time_embed_width = v;
    read_pod(in, v); s.stem_width = v;
    read_pod(in, v); s.stem_blocks = v;
    read_pod(in, v); s.trunk_width = v;
    read_pod(in, v); s.trunk_blocks = v;
    read_pod(in, v); s.head = (v == 0) ? HeadKind::vector : HeadKind::scalar;
}

inline void write_adam(std::ostream& out, const AdamState& a) {
    write_pod(out, static_cast<std::int64_t>(a.step));
    write_vec(out, a.m);
    write_vec(out, a.v);
}

inline void read_adam(std::istream& in, AdamState& a) {
    std::int64_t s = 0;
    read_pod(in, s);
    a.step = s;
    read_vec(in, a.m);
    read_vec(in, a.v);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const GuidanceModule& mod,
                            std::uint64_t seed, std::uint64_t config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::write_pod(out, kCheckpointVersion);
    detail::write_spec(out, mod.actor_spec);
    detail::write_spec(out, mod.critic_spec);
    detail::write_pod(out, mod.policy.lambda);
    detail::write_pod(out, mod.policy.beta);
    detail::write_pod(out, seed);
    detail::write_pod(out, config_hash);
    detail::write_vec(out, mod.phi);
    detail::write_vec(out, mod.theta);
    detail::write_adam(out, mod.actor_opt);
    detail::write_adam(out, mod.critic_opt);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

struct CheckpointInfo {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

inline GuidanceModule load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    detail::read_pod(in, version);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    GuidanceModule mod;
    detail::read_spec(in, mod.actor_spec);
    detail::read_spec(in, mod.critic_spec);
    detail::read_pod(in, mod.policy.lambda);
    detail::read_pod(in, mod.policy.beta);
    CheckpointInfo ci;
    detail::read_pod(in, ci.seed);
    detail::read_pod(in, ci.config_hash);
    detail::read_vec(in, mod.phi);
    detail::read_vec(in, mod.theta);
    detail::read_adam(in, mod.actor_opt);
    detail::read_adam(in, mod.critic_opt);

    mod.actor_spec.validate();
    mod.critic_spec.validate();
    mod.policy.dimension = mod.actor_spec.state_dim;
    mod.policy.validate();
    if (mod.phi.size() != static_cast<std::size_t>(mod.actor_spec.param_count()) ||
        mod.theta.size() != static_cast<std::size_t>(mod.critic_spec.param_count()) ||
        mod.actor_opt.m.size() != mod.phi.size() || mod.critic_opt.m.size() != mod.theta.size())
        throw std::runtime_error("checkpoint: parameter arrays do not match specs in " + path);
    if (info) *info = ci;
    return mod;
}

// Text manifest written beside each checkpoint.
inline void write_manifest(const std::string& path, const GuidanceModule& mod, std::uint64_t seed,
                           std::uint64_t config_hash, const TerminalWeights& weights,
                           int grid_steps) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot open " + path + " for writing");
    out << "actor_params=" << mod.actor_spec.param_count() << "\n";
    out << "critic_params=" << mod.critic_spec.param_count() << "\n";
    out << "seed=" << seed << "\n";
    out << "config_hash=" << hash_hex(config_hash) << "\n";
    out << "alpha_vis=" << format_double(weights.alpha_vis) << "\n";
    out << "alpha_hole=" << format_double(weights.alpha_hole) << "\n";
    out << "beta=" << format_double(mod.policy.beta) << "\n";
    out << "lambda=" << format_double(mod.policy.lambda) << "\n";
    out << "steps=" << grid_steps << "\n";
}

}  // namespace aid

#endif
