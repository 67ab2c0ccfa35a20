#include "uwoc/ooc.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "uwoc/error.hpp"
#include "uwoc/rng.hpp"

namespace uwoc::ooc {

namespace {

int mod(int a, int m) {
  const int r = a % m;
  return r < 0 ? r + m : r;
}

void check_params(int length, int weight, int max_correlation) {
  if (length < 1 || weight < 1 || max_correlation < 1) {
    throw ParameterError("OOC parameters must be positive (F, W, rho)");
  }
  if (weight > length) throw ParameterError("OOC weight W must not exceed length F");
}

// Incremental constraint state for the code under construction.
class CodeSearch {
 public:
  CodeSearch(int length, int rho, const std::vector<OocCode>& placed)
      : length_(length), rho_(rho), placed_(placed), auto_(length, 0), cross_(placed.size()) {
    for (auto& c : cross_) c.assign(length, 0);
  }

  bool can_add(int x) const {
    std::vector<int> hits;
    hits.reserve(2 * marks_.size());
    for (int m : marks_) {
      hits.push_back(mod(x - m, length_));
      hits.push_back(mod(m - x, length_));
    }
    std::sort(hits.begin(), hits.end());
    for (std::size_t i = 0; i < hits.size();) {
      std::size_t j = i;
      while (j < hits.size() && hits[j] == hits[i]) ++j;
      if (auto_[hits[i]] + static_cast<int>(j - i) > rho_) return false;
      i = j;
    }
    for (std::size_t c = 0; c < placed_.size(); ++c) {
      for (int b : placed_[c].marks) {
        if (cross_[c][mod(b - x, length_)] + 1 > rho_) return false;
      }
    }
    return true;
  }

  void add(int x) {
    for (int m : marks_) {
      ++auto_[mod(x - m, length_)];
      ++auto_[mod(m - x, length_)];
    }
    for (std::size_t c = 0; c < placed_.size(); ++c) {
      for (int b : placed_[c].marks) ++cross_[c][mod(b - x, length_)];
    }
    marks_.push_back(x);
  }

  void remove_last() {
    const int x = marks_.back();
    marks_.pop_back();
    for (int m : marks_) {
      --auto_[mod(x - m, length_)];
      --auto_[mod(m - x, length_)];
    }
    for (std::size_t c = 0; c < placed_.size(); ++c) {
      for (int b : placed_[c].marks) --cross_[c][mod(b - x, length_)];
    }
  }

  const std::vector<int>& marks() const { return marks_; }

 private:
  int length_;
  int rho_;
  const std::vector<OocCode>& placed_;
  std::vector<int> auto_;
  std::vector<std::vector<int>> cross_;
  std::vector<int> marks_;
};

bool dfs(CodeSearch& search, int weight, int length, Rng& rng, long long& budget) {
  if (static_cast<int>(search.marks().size()) == weight) return true;
  if (--budget < 0) return false;
  const int last = search.marks().back();
  const int remaining = weight - static_cast<int>(search.marks().size());
  std::vector<int> candidates;
  for (int x = last + 1; x <= length - remaining; ++x) candidates.push_back(x);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (int x : candidates) {
    if (!search.can_add(x)) continue;
    search.add(x);
    if (dfs(search, weight, length, rng, budget)) return true;
    search.remove_last();
    if (budget < 0) return false;
  }
  return false;
}

}  // namespace

std::vector<std::uint8_t> OocCode::pattern() const {
  std::vector<std::uint8_t> p(static_cast<std::size_t>(std::max(length, 0)), 0);
  for (int m : marks) p[static_cast<std::size_t>(m)] = 1;
  return p;
}

bool OocCode::is_valid() const {
  if (length < 1 || weight < 1 || max_correlation < 1) return false;
  if (static_cast<int>(marks.size()) != weight) return false;
  if (!std::is_sorted(marks.begin(), marks.end())) return false;
  if (std::adjacent_find(marks.begin(), marks.end()) != marks.end()) return false;
  if (marks.front() < 0 || marks.back() >= length) return false;
  for (int s = 1; s < length; ++s) {
    if (correlation(*this, *this, s) > max_correlation) return false;
  }
  return true;
}

long long johnson_bound(int length, int weight, int max_correlation) {
  if (!(1 <= max_correlation && max_correlation < weight && weight <= length)) {
    throw ParameterError("Johnson bound requires 1 <= rho < W <= F");
  }
  long long v = (length - max_correlation) / (weight - max_correlation);
  for (int i = max_correlation - 1; i >= 1; --i) {
    v = (static_cast<long long>(length - i) * v) / (weight - i);
  }
  return v / weight;
}

int correlation(const OocCode& a, const OocCode& b, int shift) {
  if (a.length != b.length) throw ParameterError("correlation of codes with different lengths");
  const int f = a.length;
  const auto pb = b.pattern();
  int sum = 0;
  for (int m : a.marks) sum += pb[static_cast<std::size_t>(mod(m + shift, f))];
  return sum;
}

CorrelationReport verify_family(const OocFamily& family) {
  CorrelationReport report;
  const auto& codes = family.codes;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (int s = 1; s < codes[i].length; ++s) {
      report.max_autocorrelation = std::max(report.max_autocorrelation, correlation(codes[i], codes[i], s));
    }
    for (std::size_t j = i + 1; j < codes.size(); ++j) {
      for (int s = 0; s < codes[i].length; ++s) {
        report.max_crosscorrelation = std::max(report.max_crosscorrelation, correlation(codes[i], codes[j], s));
      }
    }
  }
  return report;
}

OocCode cyclic_shift(const OocCode& code, int shift) {
  OocCode out = code;
  for (int& m : out.marks) m = mod(m + shift, code.length);
  std::sort(out.marks.begin(), out.marks.end());
  return out;
}

bool synchronous_mai_free_condition(int users, int length, int weight) {
  // M < F / W^2 + 1  <=>  (M - 1) W^2 < F
  return static_cast<long long>(users - 1) * weight * weight < length;
}

bool align_for_synchronous(OocFamily& family) {
  if (family.codes.empty()) return true;
  const int f = family.length;
  std::vector<std::uint8_t> used(static_cast<std::size_t>(f), 0);
  std::vector<OocCode> aligned;
  aligned.reserve(family.codes.size());
  for (const auto& code : family.codes) {
    bool placed = false;
    for (int s = 0; s < f && !placed; ++s) {
      OocCode shifted = cyclic_shift(code, s);
      const bool clash = std::any_of(shifted.marks.begin(), shifted.marks.end(),
                                     [&](int m) { return used[static_cast<std::size_t>(m)] != 0; });
      if (clash) continue;
      for (int m : shifted.marks) used[static_cast<std::size_t>(m)] = 1;
      aligned.push_back(std::move(shifted));
      placed = true;
    }
    if (!placed) return false;
  }
  family.codes = std::move(aligned);
  return true;
}

OocFamily generate_family(int length, int weight, int max_correlation, int max_count, std::uint64_t seed,
                          const GenerateOptions& options) {
  check_params(length, weight, max_correlation);
  if (max_count < 0) throw ParameterError("max_count must be non-negative");

  OocFamily family{length, weight, max_correlation, {}, false};

  if (max_correlation >= weight) {
    // Every W-subset satisfies the bound; enumerate lexicographically.
    std::vector<int> comb(static_cast<std::size_t>(weight));
    std::iota(comb.begin(), comb.end(), 0);
    while (static_cast<int>(family.codes.size()) < max_count) {
      family.codes.push_back(OocCode{length, weight, max_correlation, comb});
      int i = weight - 1;
      while (i >= 0 && comb[static_cast<std::size_t>(i)] == length - weight + i) --i;
      if (i < 0) break;
      ++comb[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < weight; ++k) comb[static_cast<std::size_t>(k)] = comb[static_cast<std::size_t>(k - 1)] + 1;
    }
    family.shortfall = static_cast<int>(family.codes.size()) < max_count;
    return family;
  }

  const long long cap = johnson_bound(length, weight, max_correlation);
  const int target = static_cast<int>(std::min<long long>(max_count, cap));

  for (int round = 0; round < std::max(1, options.family_restarts); ++round) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(round));
    std::vector<OocCode> codes;
    while (static_cast<int>(codes.size()) < target) {
      bool found = false;
      for (int attempt = 0; attempt < options.restarts_per_code && !found; ++attempt) {
        CodeSearch search(length, max_correlation, codes);
        search.add(0);
        long long budget = options.node_budget_per_code;
        if (dfs(search, weight, length, rng, budget)) {
          codes.push_back(OocCode{length, weight, max_correlation, search.marks()});
          found = true;
        }
      }
      if (!found) break;
    }
    if (codes.size() > family.codes.size()) family.codes = std::move(codes);
    if (static_cast<int>(family.codes.size()) == target) break;
  }
  family.shortfall = static_cast<int>(family.codes.size()) < max_count;
  if (options.align_for_synchronous) align_for_synchronous(family);
  return family;
}

ChipSequence spread(std::span<const std::uint8_t> bits, const OocCode& code, double bit_time) {
  ChipSequence seq;
  seq.chip_time = code.length > 0 ? bit_time / code.length : 0.0;
  const auto p = code.pattern();
  seq.chips.reserve(bits.size() * p.size());
  for (std::uint8_t b : bits) {
    for (std::uint8_t c : p) seq.chips.push_back(b != 0 ? c : 0);
  }
  return seq;
}

int despread_chip_level(std::span<const double> frame, const OocCode& code, double threshold) {
  if (static_cast<int>(frame.size()) != code.length) throw ParameterError("frame length must equal F");
  for (int m : code.marks) {
    if (!(frame[static_cast<std::size_t>(m)] > threshold)) return 0;
  }
  return 1;
}

std::vector<int> assign_code_subsets(const std::vector<std::vector<int>>& adjacency, int n_subsets) {
  if (n_subsets < 1) throw ParameterError("need at least one code subset");
  const int n = static_cast<int>(adjacency.size());
  std::vector<int> color(static_cast<std::size_t>(n), -1);

  auto ok = [&](int cell, int c) {
    for (int nb : adjacency[static_cast<std::size_t>(cell)]) {
      if (nb < 0 || nb >= n) throw ParameterError("adjacency references an unknown cell");
      if (nb != cell && color[static_cast<std::size_t>(nb)] == c) return false;
    }
    return true;
  };

  int cell = 0;
  while (cell < n) {
    if (cell < 0) throw InfeasibleError("cell graph is not colorable with " + std::to_string(n_subsets) + " subsets");
    int& c = color[static_cast<std::size_t>(cell)];
    int next = c + 1;
    while (next < n_subsets && !ok(cell, next)) ++next;
    if (next < n_subsets) {
      c = next;
      ++cell;
    } else {
      c = -1;
      --cell;
    }
  }
  return color;
}

std::vector<std::vector<int>> hex_grid_adjacency(int rings) {
  if (rings < 0) throw ParameterError("ring count must be non-negative");
  static constexpr std::pair<int, int> kDirs[6] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};
  std::vector<std::pair<int, int>> cells{{0, 0}};
  for (int k = 1; k <= rings; ++k) {
    std::pair<int, int> h{kDirs[4].first * k, kDirs[4].second * k};
    for (int side = 0; side < 6; ++side) {
      for (int step = 0; step < k; ++step) {
        cells.push_back(h);
        h = {h.first + kDirs[side].first, h.second + kDirs[side].second};
      }
    }
  }
  std::map<std::pair<int, int>, int> index;
  for (std::size_t i = 0; i < cells.size(); ++i) index[cells[i]] = static_cast<int>(i);
  std::vector<std::vector<int>> adj(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (const auto& d : kDirs) {
      auto it = index.find({cells[i].first + d.first, cells[i].second + d.second});
      if (it != index.end()) adj[i].push_back(it->second);
    }
    std::sort(adj[i].begin(), adj[i].end());
  }
  return adj;
}

long long network_capacity(const CapacityPlan& plan) {
  if (plan.codes_per_family < 1 || plan.cells < 1) throw ParameterError("capacity plan fields must be positive");
  switch (plan.scheme) {
    case CapacityScheme::kOcdmaReuse:
      return static_cast<long long>(plan.codes_per_family / 3) * plan.cells;
    case CapacityScheme::kWdmOcdma:
      if (plan.wavelengths < 1) throw ParameterError("wavelength count must be positive");
      return static_cast<long long>(plan.wavelengths / 3) * plan.codes_per_family * plan.cells;
  }
  return 0;
}

void write_family(std::ostream& os, const OocFamily& family) {
  os << family.length << ' ' << family.weight << ' ' << family.max_correlation << '\n';
  for (const auto& code : family.codes) {
    for (std::size_t i = 0; i < code.marks.size(); ++i) os << (i ? " " : "") << code.marks[i];
    os << '\n';
  }
}

OocFamily read_family(std::istream& is) {
  OocFamily family;
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("code family file is empty");
  std::istringstream header(line);
  if (!(header >> family.length >> family.weight >> family.max_correlation)) {
    throw ParameterError("code family header must be 'F W rho'");
  }
  check_params(family.length, family.weight, family.max_correlation);
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    OocCode code{family.length, family.weight, family.max_correlation, {}};
    int m = 0;
    while (row >> m) code.marks.push_back(m);
    std::sort(code.marks.begin(), code.marks.end());
    if (!code.is_valid()) throw ParameterError("invalid code line: " + line);
    family.codes.push_back(std::move(code));
  }
  return family;
}

}  // namespace uwoc::ooc
