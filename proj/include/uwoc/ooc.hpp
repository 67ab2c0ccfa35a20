#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace uwoc::ooc {

/// A single (F, W, rho) optical orthogonal code: the sorted chip positions
/// of its W marks within a frame of F chips.
struct OocCode {
  int length = 0;           // F, chips per bit
  int weight = 0;           // W, number of marks
  int max_correlation = 0;  // rho
  std::vector<int> marks;   // sorted, distinct, each in [0, F)

  /// Binary chip pattern of length F.
  std::vector<std::uint8_t> pattern() const;

  /// Structural checks plus the out-of-phase autocorrelation bound.
  bool is_valid() const;
};

/// Codes sharing (F, W, rho) whose pairwise cyclic cross-correlation never
/// exceeds rho.
struct OocFamily {
  int length = 0;
  int weight = 0;
  int max_correlation = 0;
  std::vector<OocCode> codes;
  bool shortfall = false;  // the search stopped short of the requested count

  std::size_t size() const { return codes.size(); }
};

struct ChipSequence {
  std::vector<std::uint8_t> chips;
  double chip_time = 0.0;  // Tc = Tb / F, seconds
};

enum class CapacityScheme { kOcdmaReuse, kWdmOcdma };

struct CapacityPlan {
  int codes_per_family = 0;  // N_c
  int wavelengths = 1;       // N_w, only used by WDM/OCDMA
  int cells = 0;             // N_OBTS
  CapacityScheme scheme = CapacityScheme::kOcdmaReuse;
};

/// Nested-floor Johnson upper bound on the size of an (F, W, rho) family.
/// Requires 1 <= rho < W <= F.
long long johnson_bound(int length, int weight, int max_correlation);

/// Number of (i, j) with a[j] = 1 and b[(j + shift) mod F] = 1.
int correlation(const OocCode& a, const OocCode& b, int shift);

/// Largest out-of-phase autocorrelation and largest cross-correlation over
/// every shift and every pair, by exhaustive evaluation.
struct CorrelationReport {
  int max_autocorrelation = 0;
  int max_crosscorrelation = 0;
  bool within(int rho) const { return max_autocorrelation <= rho && max_crosscorrelation <= rho; }
};
CorrelationReport verify_family(const OocFamily& family);

struct GenerateOptions {
  long long node_budget_per_code = 200000;  // depth-first search nodes per code
  int restarts_per_code = 20;
  int family_restarts = 50;  // fresh searches when a partial family cannot be extended
  bool align_for_synchronous = true;
};

/// Randomised depth-first construction of up to `max_count` codes.
/// Deterministic in `seed`. The largest family over the restarts is kept;
/// when fewer codes are found than requested it is returned
/// with `shortfall` set. For rho >= W the correlation constraint is vacuous
/// and the first `max_count` W-subsets in lexicographic order are returned.
OocFamily generate_family(int length, int weight, int max_correlation, int max_count, std::uint64_t seed,
                          const GenerateOptions& options = {});

/// Cyclically shifts codes so that their zero-offset mark sets are pairwise
/// disjoint. A greedy lowest-shift choice always succeeds when
/// M < F / W^2 + 1 (each placed code rules out at most W^2 shifts).
/// Returns false, leaving the family unchanged, if no such shifts exist.
bool align_for_synchronous(OocFamily& family);

/// Cyclic shift of a code by `shift` chips (marks re-sorted).
OocCode cyclic_shift(const OocCode& code, int shift);

/// True when M < F / W^2 + 1.
bool synchronous_mai_free_condition(int users, int length, int weight);

/// OOK spreading: bit 1 -> code pattern, bit 0 -> F zero chips.
ChipSequence spread(std::span<const std::uint8_t> bits, const OocCode& code, double bit_time = 0.0);

/// Hard-limited chip-level AND detector over one frame of F samples.
int despread_chip_level(std::span<const double> frame, const OocCode& code, double threshold);

/// Proper coloring of a cell adjacency graph with `n_subsets` colors,
/// assigned by backtracking in cell order with the lowest subset first.
/// Throws InfeasibleError if no coloring exists.
std::vector<int> assign_code_subsets(const std::vector<std::vector<int>>& adjacency, int n_subsets = 3);

/// Adjacency of a hexagonal cluster: the center cell followed by `rings`
/// concentric rings, each ring listed counter-clockwise.
std::vector<std::vector<int>> hex_grid_adjacency(int rings);

long long network_capacity(const CapacityPlan& plan);

/// Text format: header "F W rho", then one code per line as mark indices.
void write_family(std::ostream& os, const OocFamily& family);
OocFamily read_family(std::istream& is);

}  // namespace uwoc::ooc
