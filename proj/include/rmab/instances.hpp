#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmab/mdp.hpp"

namespace rmab {

/// Maternal engagement states, best first.
enum MaternalState : std::size_t { kSelfMotivated = 0, kPersuadable = 1, kLostCause = 2 };

/// Persuadable-state behavior of a beneficiary category.
struct MaternalCategory {
    char label = 'A';
    double p_ps = 0.0;  ///< P -> S under intervention
    double p_pl = 0.0;  ///< P -> L without intervention
};

inline constexpr MaternalCategory kCategoryA{'A', 0.8, 0.8};
inline constexpr MaternalCategory kCategoryB{'B', 0.4, 0.6};
inline constexpr MaternalCategory kCategoryC{'C', 0.1, 0.6};

/// Completion of the S/P/L model where the observations leave rows open.
struct MaternalParams {
    std::size_t n_a = 10;
    std::size_t n_b = 10;
    std::size_t n_c = 30;
    std::size_t budget = 10;
    MaternalCategory a = kCategoryA;
    MaternalCategory b = kCategoryB;
    MaternalCategory c = kCategoryC;
    /// S -> S under both actions; the rest goes to P.
    double s_retention = 0.9;
    /// L -> P under both actions; the rest stays in L.
    double l_to_p = 0.1;
    /// Share of the non-S mass at (P, active) that stays in P; the rest drops to L.
    double active_stay_share = 0.5;
    std::size_t initial_state = kPersuadable;
};

/// 3-state S/P/L arm with state rewards (2, 1, 0).
ArmMdp maternal_arm(const MaternalCategory& category, const MaternalParams& params = {});

/// 4-state circulant arm, rewards (-1, 0, 0, 1).
ArmMdp circulant_arm();
/// 5-state restart arm (p1 = 1, q1 = 0, p0 = 0.1, q0 = 0.9), passive reward 0.9^Z.
/// The active reward defaults to the same state reward.
ArmMdp restart_arm(std::optional<std::vector<double>> active_reward = std::nullopt);
/// 10-state band chain with reward sqrt(Z/10): p moves up, q moves down.
ArmMdp mentoring_arm(double p1, double q1, double p0, double q0);
/// Both actions identical: circulant passive dynamics and rewards.
ArmMdp action_symmetric_arm();
/// A 3-state arm whose passive set is not monotone in the subsidy.
ArmMdp non_indexable_arm();

/// Identical arms with initial states drawn uniformly from `seed`.
RmabInstance homogeneous(const ArmMdp& arm, std::size_t n_arms, std::size_t budget, std::uint64_t seed);

RmabInstance circulant(std::size_t n_arms, std::size_t budget = 1, std::uint64_t seed = 0);
RmabInstance restart(std::size_t n_arms, std::size_t budget = 1, std::uint64_t seed = 0,
                     std::optional<std::vector<double>> active_reward = std::nullopt);
RmabInstance mentoring(std::size_t n_arms, std::size_t budget = 1, double p1 = 0.7, double q1 = 0.3, double p0 = 0.7,
                       double q0 = 0.3, std::uint64_t seed = 0);

/// Arms ordered A..., B..., C...; every arm starts in `params.initial_state`.
RmabInstance maternal_static(const MaternalParams& params = {});

/// Static instance plus one change at `change_week`: A arms take B's
/// parameters, B arms take C's, and n_a arms drawn (seeded) from category C
/// take A's.
RmabInstance maternal_dynamic(const MaternalParams& params = {}, std::size_t change_week = 28,
                              std::uint64_t seed = 0);

struct GeneratorInfo {
    std::string name;
    std::string description;
};

const std::vector<GeneratorInfo>& generators();

/// Builds a named generator from a JSON parameter object; unknown names and
/// unknown parameters are rejected.
RmabInstance make_instance(std::string_view generator, const nlohmann::json& params = nlohmann::json::object());

class InstanceFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const ArmMdp& arm);
nlohmann::json to_json(const RmabInstance& instance);
/// Parses and validates; messages name the offending path, e.g. "arms[1].transitions[0] row 2 ...".
RmabInstance instance_from_json(const nlohmann::json& doc);

RmabInstance load_instance(const std::filesystem::path& path);
void save_instance(const RmabInstance& instance, const std::filesystem::path& path);

}  // namespace rmab
