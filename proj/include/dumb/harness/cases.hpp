#ifndef DUMB_HARNESS_CASES_HPP
#define DUMB_HARNESS_CASES_HPP

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "dumb/models/train.hpp"

namespace dumb {

/// Attacker scenario by equality of dataset source (DU), model architecture
/// (M) and class balance (B) between surrogate and victim.
///
///        DU  M   B
///   C1   =   =   =    (white-box)
///   C2   =   =   !=
///   C3   =   !=  =
///   C4   =   !=  !=
///   C5   !=  =   =
///   C6   !=  =   !=
///   C7   !=  !=  =
///   C8   !=  !=  !=
enum class DumbCase { C1 = 1, C2, C3, C4, C5, C6, C7, C8 };

inline constexpr std::array<DumbCase, 8> kAllCases{DumbCase::C1, DumbCase::C2, DumbCase::C3, DumbCase::C4,
                                                   DumbCase::C5, DumbCase::C6, DumbCase::C7, DumbCase::C8};

inline DumbCase case_from_matches(bool same_source, bool same_arch, bool same_balance) {
    const int index = (same_source ? 0 : 4) + (same_arch ? 0 : 2) + (same_balance ? 0 : 1);
    return static_cast<DumbCase>(index + 1);
}

inline int case_index(DumbCase c) { return static_cast<int>(c) - 1; }

inline std::string case_name(DumbCase c) { return "C" + std::to_string(static_cast<int>(c)); }

inline DumbCase parse_case(const std::string& name) {
    if (name.size() == 2 && name[0] == 'C' && name[1] >= '1' && name[1] <= '8') return static_cast<DumbCase>(name[1] - '0');
    throw Error("config-error", "unknown case " + name);
}

/// Case of a (surrogate, victim) model pair.
inline DumbCase classify_case(const ModelProvenance& src, const ModelProvenance& trg) {
    if (src.task != trg.task) throw Error("task-mismatch", src.id() + " vs " + trg.id());
    return case_from_matches(src.source == trg.source, src.arch == trg.arch, src.balance == trg.balance);
}

/// Case of a model-free sample set built from a source dataset. Its M and B
/// dimensions compare the reference model used for tuning with the victim.
inline DumbCase classify_transfer_case(const std::string& task, const std::string& source,
                                       const std::string& reference_arch, const std::string& reference_balance,
                                       const ModelProvenance& trg) {
    if (task != trg.task) throw Error("task-mismatch", task + " vs " + trg.id());
    return case_from_matches(source == trg.source, reference_arch == trg.arch, reference_balance == trg.balance);
}

} // namespace dumb

#endif
