#include "hfc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hfc/error.hpp"

namespace hfc {

namespace {

int mod(int a, int m) { return ((a % m) + m) % m; }

constexpr double kSqrt3 = 1.7320508075688772;

Color third_color(Color a, Color b) {
  return static_cast<Color>(3 - static_cast<int>(a) - static_cast<int>(b));
}

}  // namespace

Pauli basis_of(Color c) noexcept {
  switch (c) {
    case Color::R: return Pauli::Z;
    case Color::G: return Pauli::Y;
    case Color::B: return Pauli::X;
  }
  return Pauli::Z;
}

char to_char(Color c) noexcept { return "RGB"[static_cast<int>(c)]; }
char to_char(Pauli p) noexcept { return "XYZ"[static_cast<int>(p)]; }

Color color_from_index(int i) {
  if (i < 0 || i > 2) throw Error(ErrorKind::InvalidArgument, "color index out of range");
  return static_cast<Color>(i);
}

Lattice::Lattice(std::vector<Site> sites, std::vector<Bond> bonds, std::vector<Plaquette> plaquettes)
    : L_(0), sites_(std::move(sites)), bonds_(std::move(bonds)), plaquettes_(std::move(plaquettes)) {
  index_incidence();
}

void Lattice::index_incidence() {
  incident_.assign(sites_.size(), {});
  for (const auto& b : bonds_) {
    incident_.at(b.a).push_back(b.id);
    incident_.at(b.b).push_back(b.id);
  }
}

int Lattice::site_index(int x, int y, int sublattice) const {
  return 2 * (mod(y, L_) * L_ + mod(x, L_)) + sublattice;
}

int Lattice::bond_index(int x, int y, int dir) const {
  return 3 * (mod(y, L_) * L_ + mod(x, L_)) + dir;
}

int Lattice::plaquette_index(int x, int y) const { return mod(y, L_) * L_ + mod(x, L_); }

Lattice Lattice::honeycomb(int L) {
  if (L < 3 || L % 3 != 0) {
    throw Error(ErrorKind::InvalidL, "L must be a positive multiple of 3, got " + std::to_string(L));
  }
  Lattice lat;
  lat.L_ = L;
  const int cells = L * L;
  lat.sites_.resize(2 * cells);
  for (int y = 0; y < L; ++y) {
    for (int x = 0; x < L; ++x) {
      const double ax = kSqrt3 * x + 0.5 * kSqrt3 * y;
      const double ay = 1.5 * y;
      for (int sub = 0; sub < 2; ++sub) {
        Site s;
        s.id = lat.site_index(x, y, sub);
        s.cell_x = x;
        s.cell_y = y;
        s.sublattice = sub;
        s.px = ax + (sub == 1 ? 0.5 * kSqrt3 : 0.0);
        s.py = ay + (sub == 1 ? 0.5 : 0.0);
        lat.sites_[s.id] = s;
      }
    }
  }

  lat.bonds_.resize(3 * cells);
  for (int y = 0; y < L; ++y) {
    for (int x = 0; x < L; ++x) {
      const int a = lat.site_index(x, y, 0);
      const std::array<int, 3> partner = {lat.site_index(x, y, 1), lat.site_index(x - 1, y, 1),
                                          lat.site_index(x, y - 1, 1)};
      for (int dir = 0; dir < 3; ++dir) {
        Bond b;
        b.id = lat.bond_index(x, y, dir);
        b.a = a;
        b.b = partner[dir];
        lat.bonds_[b.id] = b;
      }
    }
  }

  // Plaquette colors tile with period 3: color = (x - y) mod 3, reference (0,0) = R.
  lat.plaquettes_.resize(cells);
  std::vector<std::vector<int>> bond_plaquettes(3 * cells);
  for (int y = 0; y < L; ++y) {
    for (int x = 0; x < L; ++x) {
      Plaquette p;
      p.id = lat.plaquette_index(x, y);
      p.color = static_cast<Color>(mod(x - y, 3));
      p.sites = {lat.site_index(x, y, 0),         lat.site_index(x, y, 1),
                 lat.site_index(x + 1, y, 0),     lat.site_index(x + 1, y - 1, 1),
                 lat.site_index(x + 1, y - 1, 0), lat.site_index(x, y - 1, 1)};
      p.bonds = {lat.bond_index(x, y, 0),         lat.bond_index(x + 1, y, 1),
                 lat.bond_index(x + 1, y, 2),     lat.bond_index(x + 1, y - 1, 0),
                 lat.bond_index(x + 1, y - 1, 1), lat.bond_index(x, y, 2)};
      for (int b : p.bonds) bond_plaquettes[b].push_back(p.id);
      lat.plaquettes_[p.id] = p;
    }
  }

  // Bond color is the one absent from its two plaquettes.
  for (auto& b : lat.bonds_) {
    const auto& ps = bond_plaquettes[b.id];
    if (ps.size() != 2) throw Error(ErrorKind::InvalidArgument, "bond not shared by two plaquettes");
    const Color c0 = lat.plaquettes_[ps[0]].color;
    const Color c1 = lat.plaquettes_[ps[1]].color;
    if (c0 == c1) throw Error(ErrorKind::InvalidArgument, "adjacent plaquettes share a color");
    b.color = third_color(c0, c1);
  }
  lat.index_incidence();
  return lat;
}

std::vector<int> Lattice::bonds_of_color(Color c) const {
  std::vector<int> out;
  for (const auto& b : bonds_) {
    if (b.color == c) out.push_back(b.id);
  }
  return out;
}

double Lattice::distance(int i, int j) const {
  const Site& si = sites_.at(i);
  const Site& sj = sites_.at(j);
  const double dx = sj.px - si.px;
  const double dy = sj.py - si.py;
  if (!is_torus()) return std::hypot(dx, dy);
  const double t1x = kSqrt3 * L_;
  const double t2x = 0.5 * kSqrt3 * L_;
  const double t2y = 1.5 * L_;
  double best = std::numeric_limits<double>::infinity();
  for (int k1 = -1; k1 <= 1; ++k1) {
    for (int k2 = -1; k2 <= 1; ++k2) {
      best = std::min(best, std::hypot(dx + k1 * t1x + k2 * t2x, dy + k2 * t2y));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

Schedule Schedule::floquet(const Lattice& lattice, int r) {
  if (!lattice.is_torus()) throw Error(ErrorKind::InvalidArgument, "floquet schedule needs a torus");
  if (r < 3 || r % 3 != 0) {
    throw Error(ErrorKind::InvalidR, "r must be a positive multiple of 3, got " + std::to_string(r));
  }
  Schedule s;
  for (int n = 0; n <= r; ++n) {
    Round round;
    round.index = n;
    round.color = static_cast<Color>(n % 3);
    round.bonds = lattice.bonds_of_color(*round.color);
    s.rounds_.push_back(std::move(round));
  }
  s.index(lattice);
  return s;
}

Schedule Schedule::custom(const Lattice& lattice, std::vector<std::vector<int>> rounds) {
  Schedule s;
  for (int n = 0; n < static_cast<int>(rounds.size()); ++n) {
    std::set<int> touched;
    Round round;
    round.index = n;
    for (int b : rounds[n]) {
      if (b < 0 || b >= lattice.num_bonds()) {
        throw Error(ErrorKind::InvalidArgument, "round " + std::to_string(n) + " references unknown bond");
      }
      const Bond& bond = lattice.bond(b);
      if (!touched.insert(bond.a).second || !touched.insert(bond.b).second) {
        throw Error(ErrorKind::InvalidArgument, "round " + std::to_string(n) + " has overlapping bonds");
      }
      round.bonds.push_back(b);
    }
    if (!round.bonds.empty()) {
      const Color c = lattice.bond(round.bonds.front()).color;
      const bool uniform = std::all_of(round.bonds.begin(), round.bonds.end(),
                                       [&](int b) { return lattice.bond(b).color == c; });
      if (uniform) round.color = c;
    }
    s.rounds_.push_back(std::move(round));
  }
  s.index(lattice);
  return s;
}

void Schedule::index(const Lattice& lattice) {
  slots_.clear();
  round_offset_.clear();
  bond_slots_.assign(lattice.num_bonds(), {});
  for (const auto& round : rounds_) {
    round_offset_.push_back(static_cast<int>(slots_.size()));
    for (int b : round.bonds) {
      bond_slots_[b].push_back(static_cast<int>(slots_.size()));
      slots_.push_back({b, round.index});
    }
  }

  windows_.clear();
  for (int n = 0; n + 1 < num_rounds(); ++n) {
    for (const auto& p : lattice.plaquettes()) {
      FluxWindow w;
      w.plaquette = p.id;
      w.first_round = n;
      bool complete = true;
      for (int k = 0; k < 6 && complete; ++k) {
        const int s0 = slot_index(n, p.bonds[k]);
        const int s1 = slot_index(n + 1, p.bonds[k]);
        if ((s0 >= 0) == (s1 >= 0)) {
          complete = false;
        } else {
          w.slots[k] = s0 >= 0 ? s0 : s1;
        }
      }
      if (complete) windows_.push_back(w);
    }
  }
}

int Schedule::slot_index(int round, int bond) const {
  for (int s : bond_slots_.at(bond)) {
    if (slots_[s].round == round) return s;
  }
  return -1;
}

std::vector<FluxWindow> Schedule::final_windows() const {
  std::vector<FluxWindow> out;
  for (const auto& w : windows_) {
    if (w.first_round + 1 == depth()) out.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------

int count_crossing(const Lattice& lattice, const Cut& cut, std::span<const int> bonds) {
  int n = 0;
  for (int b : bonds) {
    const Bond& bond = lattice.bond(b);
    if (cut.in_a.at(bond.a) != cut.in_a.at(bond.b)) ++n;
  }
  return n;
}

Cut bipartition(const Lattice& lattice) {
  if (!lattice.is_torus()) throw Error(ErrorKind::InvalidArgument, "bipartition needs a torus");
  const int L = lattice.L();
  // Zigzag columns: A(x, .) -> 2x, B(x, .) -> 2x + 1. Region A takes an even
  // number of columns starting on an A column so both boundaries cross only
  // direction-1 bonds.
  const int columns = 2 * (L / 2);
  const auto final_dimers = lattice.bonds_of_color(Color::R);
  for (char axis : {'x', 'y'}) {
    Cut cut;
    cut.axis = axis;
    cut.in_a.assign(lattice.num_sites(), 0);
    for (const auto& s : lattice.sites()) {
      const int coord = axis == 'x' ? s.cell_x : s.cell_y;
      const int column = 2 * coord + s.sublattice;
      if (column < columns) {
        cut.in_a[s.id] = 1;
        cut.region.push_back(s.id);
      }
    }
    cut.crossing_final_dimers = count_crossing(lattice, cut, final_dimers);
    if (cut.crossing_final_dimers == 2 * L / 3) return cut;
  }
  throw Error(ErrorKind::InvalidArgument, "no cylinder cut satisfies the Clifford calibration");
}

// ---------------------------------------------------------------------------

std::pair<Lattice, Schedule> build_custom_graph(const CustomGraphSpec& spec) {
  const int n = static_cast<int>(spec.sublattice.size());
  std::vector<Site> sites(n);
  for (int i = 0; i < n; ++i) {
    if (spec.sublattice[i] != 0 && spec.sublattice[i] != 1) {
      throw Error(ErrorKind::InvalidArgument, "sublattice tag must be 0 or 1");
    }
    sites[i].id = i;
    sites[i].sublattice = spec.sublattice[i];
    sites[i].px = std::cos(2.0 * M_PI * i / std::max(n, 1));
    sites[i].py = std::sin(2.0 * M_PI * i / std::max(n, 1));
  }
  std::vector<Bond> bonds;
  for (const auto& b : spec.bonds) {
    if (b.a < 0 || b.a >= n || b.b < 0 || b.b >= n) {
      throw Error(ErrorKind::InvalidArgument, "bond references a dangling site");
    }
    if (spec.sublattice[b.a] == spec.sublattice[b.b]) {
      throw Error(ErrorKind::InvalidArgument, "bond must join the two sublattices");
    }
    Bond bond;
    bond.id = static_cast<int>(bonds.size());
    bond.a = spec.sublattice[b.a] == 0 ? b.a : b.b;
    bond.b = spec.sublattice[b.a] == 0 ? b.b : b.a;
    bond.color = b.color;
    bonds.push_back(bond);
  }
  std::vector<Plaquette> plaquettes;
  for (std::size_t k = 0; k < spec.plaquette_bonds.size(); ++k) {
    Plaquette p;
    p.id = static_cast<int>(k);
    p.color = k < spec.plaquette_colors.size() ? spec.plaquette_colors[k] : Color::R;
    p.bonds = spec.plaquette_bonds[k];
    for (int i = 0; i < 6; ++i) {
      const int b = p.bonds[i];
      if (b < 0 || b >= static_cast<int>(bonds.size())) {
        throw Error(ErrorKind::InvalidArgument, "plaquette references unknown bond");
      }
    }
    // Site i is shared by bonds i and i+1 along the ring.
    for (int i = 0; i < 6; ++i) {
      const Bond& u = bonds[p.bonds[i]];
      const Bond& v = bonds[p.bonds[(i + 1) % 6]];
      p.sites[i] = (u.a == v.a || u.a == v.b) ? u.a : u.b;
    }
    plaquettes.push_back(p);
  }
  Lattice lattice(std::move(sites), std::move(bonds), std::move(plaquettes));
  Schedule schedule = Schedule::custom(lattice, spec.rounds);
  return {std::move(lattice), std::move(schedule)};
}

CustomGraphSpec single_bond_spec(int rounds) {
  CustomGraphSpec spec;
  spec.sublattice = {0, 1};
  spec.bonds = {{0, 1, Color::R}};
  spec.rounds.assign(rounds, std::vector<int>{0});
  return spec;
}

CustomGraphSpec hexagon_spec() {
  CustomGraphSpec spec;
  spec.sublattice = {0, 1, 0, 1, 0, 1};
  // Boundary of an R plaquette alternates G and B bonds.
  for (int i = 0; i < 6; ++i) {
    spec.bonds.push_back({i, (i + 1) % 6, i % 2 == 0 ? Color::G : Color::B});
  }
  spec.rounds = {{0, 2, 4}, {1, 3, 5}};
  spec.plaquette_bonds = {{0, 1, 2, 3, 4, 5}};
  spec.plaquette_colors = {Color::R};
  return spec;
}

}  // namespace hfc
