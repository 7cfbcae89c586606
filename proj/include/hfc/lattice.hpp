#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hfc {

enum class Color : std::uint8_t { R = 0, G = 1, B = 2 };
enum class Pauli : std::uint8_t { X = 0, Y = 1, Z = 2 };

/// Measurement basis of a bond color: R -> Z, G -> Y, B -> X.
Pauli basis_of(Color c) noexcept;
char to_char(Color c) noexcept;
char to_char(Pauli p) noexcept;
Color color_from_index(int i);

struct Site {
  int id = 0;
  int cell_x = 0;
  int cell_y = 0;
  int sublattice = 0;  // 0 = A, 1 = B
  double px = 0.0;
  double py = 0.0;
};

/// Bonds are always oriented from the A-sublattice site `a` to the B-sublattice site `b`.
struct Bond {
  int id = 0;
  int a = 0;
  int b = 0;
  Color color = Color::R;
};

struct Plaquette {
  int id = 0;
  Color color = Color::R;
  std::array<int, 6> bonds{};
  std::array<int, 6> sites{};
};

/// Honeycomb geometry. Either the periodic Kekule-tricolored torus (L > 0) or a
/// small open custom graph (L == 0) used by the exact cross-checks.
class Lattice {
 public:
  /// Periodic L x L torus; L must be a positive multiple of 3.
  static Lattice honeycomb(int L);

  Lattice(std::vector<Site> sites, std::vector<Bond> bonds, std::vector<Plaquette> plaquettes);

  int L() const noexcept { return L_; }
  bool is_torus() const noexcept { return L_ > 0; }

  int num_sites() const noexcept { return static_cast<int>(sites_.size()); }
  int num_bonds() const noexcept { return static_cast<int>(bonds_.size()); }
  int num_plaquettes() const noexcept { return static_cast<int>(plaquettes_.size()); }

  std::span<const Site> sites() const noexcept { return sites_; }
  std::span<const Bond> bonds() const noexcept { return bonds_; }
  std::span<const Plaquette> plaquettes() const noexcept { return plaquettes_; }
  const Site& site(int i) const { return sites_.at(i); }
  const Bond& bond(int i) const { return bonds_.at(i); }
  const Plaquette& plaquette(int i) const { return plaquettes_.at(i); }

  const std::vector<int>& bonds_at(int site) const { return incident_.at(site); }
  std::vector<int> bonds_of_color(Color c) const;

  /// Euclidean distance, minimum image on the torus.
  double distance(int i, int j) const;

  // Torus indexing (row-major unit cells). Direction 0: A(x,y)-B(x,y),
  // 1: A(x,y)-B(x-1,y), 2: A(x,y)-B(x,y-1).
  int site_index(int x, int y, int sublattice) const;
  int bond_index(int x, int y, int dir) const;
  int plaquette_index(int x, int y) const;

 private:
  Lattice() = default;
  void index_incidence();

  int L_ = 0;
  std::vector<Site> sites_;
  std::vector<Bond> bonds_;
  std::vector<Plaquette> plaquettes_;
  std::vector<std::vector<int>> incident_;
};

struct Round {
  int index = 0;
  std::optional<Color> color;  // set when every bond in the round shares one color
  std::vector<int> bonds;
};

struct Slot {
  int bond = 0;
  int round = 0;
};

/// A plaquette enveloped by rounds (first_round, first_round + 1); `slots` are
/// the six outcome slots on its boundary bonds.
struct FluxWindow {
  int plaquette = 0;
  int first_round = 0;
  std::array<int, 6> slots{};
};

class Schedule {
 public:
  /// Floquet round-robin R, G, B, R, ... with r + 1 rounds; r must be a positive multiple of 3.
  static Schedule floquet(const Lattice& lattice, int r);
  /// Arbitrary per-round bond sets (each round vertex-disjoint).
  static Schedule custom(const Lattice& lattice, std::vector<std::vector<int>> rounds);

  int depth() const noexcept { return num_rounds() - 1; }
  int num_rounds() const noexcept { return static_cast<int>(rounds_.size()); }
  int num_slots() const noexcept { return static_cast<int>(slots_.size()); }
  int num_bonds() const noexcept { return static_cast<int>(bond_slots_.size()); }

  std::span<const Round> rounds() const noexcept { return rounds_; }
  const Round& round(int n) const { return rounds_.at(n); }
  std::span<const Slot> slots() const noexcept { return slots_; }
  const Slot& slot(int i) const { return slots_.at(i); }
  std::span<const FluxWindow> windows() const noexcept { return windows_; }

  /// First slot index of round n; slots of a round are contiguous.
  int round_offset(int n) const { return round_offset_.at(n); }
  /// Slot index of (round, bond) or -1 when the bond is not measured in that round.
  int slot_index(int round, int bond) const;
  const std::vector<int>& slots_of_bond(int bond) const { return bond_slots_.at(bond); }
  /// Windows whose second round is the final round.
  std::vector<FluxWindow> final_windows() const;

 private:
  Schedule() = default;
  void index(const Lattice& lattice);

  std::vector<Round> rounds_;
  std::vector<Slot> slots_;
  std::vector<int> round_offset_;
  std::vector<std::vector<int>> bond_slots_;
  std::vector<FluxWindow> windows_;
};

/// Bipartition of the sites into region A and its complement.
struct Cut {
  std::vector<char> in_a;  // per site
  std::vector<int> region;  // sorted site ids in A
  char axis = 'x';
  int crossing_final_dimers = 0;

  int size_a() const noexcept { return static_cast<int>(region.size()); }
};

/// Two-cylinder cut of the torus along zigzag site columns, calibrated so that
/// the final-round R matching has exactly 2L/3 bonds crossing it.
Cut bipartition(const Lattice& lattice);

/// Number of bonds in `bonds` with endpoints on opposite sides of the cut.
int count_crossing(const Lattice& lattice, const Cut& cut, std::span<const int> bonds);

struct CustomBondSpec {
  int a = 0;
  int b = 0;
  Color color = Color::R;
};

struct CustomGraphSpec {
  std::vector<int> sublattice;  // per site, 0 or 1
  std::vector<CustomBondSpec> bonds;
  std::vector<std::vector<int>> rounds;  // bond ids per round
  std::vector<std::array<int, 6>> plaquette_bonds;  // optional hexagons by bond id
  std::vector<Color> plaquette_colors;
};

std::pair<Lattice, Schedule> build_custom_graph(const CustomGraphSpec& spec);

/// Two sites, one R bond, measured in `rounds` consecutive rounds.
CustomGraphSpec single_bond_spec(int rounds);
/// One R hexagon: G bonds measured in round 0, B bonds in round 1.
CustomGraphSpec hexagon_spec();

}  // namespace hfc
