#include <algorithm>
#include <set>

#include "doctest.h"
#include "hfc/error.hpp"
#include "hfc/lattice.hpp"

using namespace hfc;

namespace {

bool is_perfect_matching(const Lattice& lat, Color c) {
  std::vector<int> cover(lat.num_sites(), 0);
  for (int b : lat.bonds_of_color(c)) {
    ++cover[lat.bond(b).a];
    ++cover[lat.bond(b).b];
  }
  return std::all_of(cover.begin(), cover.end(), [](int k) { return k == 1; });
}

}  // namespace

TEST_CASE("honeycomb counts at L=3") {
  const auto lat = Lattice::honeycomb(3);
  CHECK(lat.num_sites() == 18);
  CHECK(lat.num_bonds() == 27);
  CHECK(lat.num_plaquettes() == 9);
  for (Color c : {Color::R, Color::G, Color::B}) CHECK(lat.bonds_of_color(c).size() == 9);
}

TEST_CASE("color classes are perfect matchings and plaquettes alternate") {
  for (int L : {3, 6, 9, 12}) {
    CAPTURE(L);
    const auto lat = Lattice::honeycomb(L);
    CHECK(lat.num_sites() == 2 * L * L);
    CHECK(lat.num_bonds() == 3 * L * L);
    for (Color c : {Color::R, Color::G, Color::B}) CHECK(is_perfect_matching(lat, c));

    std::vector<std::vector<int>> owners(lat.num_bonds());
    for (const auto& p : lat.plaquettes()) {
      for (int k = 0; k < 6; ++k) {
        const Color bc = lat.bond(p.bonds[k]).color;
        CHECK(bc != p.color);
        CHECK(bc != lat.bond(p.bonds[(k + 1) % 6]).color);
        owners[p.bonds[k]].push_back(p.id);
        // consecutive bonds share the listed site
        const Bond& u = lat.bond(p.bonds[k]);
        CHECK((u.a == p.sites[k] || u.b == p.sites[k]));
      }
      CHECK(std::set<int>(p.sites.begin(), p.sites.end()).size() == 6);
    }
    for (const auto& b : lat.bonds()) {
      REQUIRE(owners[b.id].size() == 2);
      CHECK(lat.plaquette(owners[b.id][0]).color != b.color);
      CHECK(lat.plaquette(owners[b.id][1]).color != b.color);
      CHECK(lat.site(b.a).sublattice == 0);
      CHECK(lat.site(b.b).sublattice == 1);
      CHECK(lat.distance(b.a, b.b) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("reference plaquette is R and ids are row-major") {
  const auto lat = Lattice::honeycomb(6);
  CHECK(lat.plaquette(0).color == Color::R);
  CHECK(lat.site_index(1, 0, 0) == 2);
  CHECK(lat.site_index(0, 1, 1) == 13);
  CHECK(lat.bond_index(0, 1, 2) == 20);
  CHECK(lat.site_index(-1, -1, 0) == lat.site_index(5, 5, 0));
}

TEST_CASE("invalid L") {
  for (int L : {0, 1, 2, 4, 5, 7}) {
    CAPTURE(L);
    try {
      Lattice::honeycomb(L);
      FAIL("expected invalid-L");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidL);
    }
  }
}

TEST_CASE("floquet schedule") {
  const auto lat = Lattice::honeycomb(3);
  const auto sch = Schedule::floquet(lat, 3);
  REQUIRE(sch.num_rounds() == 4);
  CHECK(sch.num_slots() == 36);
  const Color expect[] = {Color::R, Color::G, Color::B, Color::R};
  for (int n = 0; n < 4; ++n) CHECK(*sch.round(n).color == expect[n]);
  for (int n = 0; n < 3; ++n) {
    int count = 0;
    for (const auto& w : sch.windows()) {
      if (w.first_round != n) continue;
      ++count;
      // window plaquette has the third color
      const Color third = static_cast<Color>(3 - static_cast<int>(*sch.round(n).color) -
                                             static_cast<int>(*sch.round(n + 1).color));
      CHECK(lat.plaquette(w.plaquette).color == third);
      std::multiset<int> bonds;
      for (int s : w.slots) bonds.insert(sch.slot(s).bond);
      const auto& p = lat.plaquette(w.plaquette);
      CHECK(bonds == std::multiset<int>(p.bonds.begin(), p.bonds.end()));
    }
    CHECK(count == 3);
  }
  CHECK(sch.final_windows().size() == 3);

  const auto lat6 = Lattice::honeycomb(6);
  const auto sch6 = Schedule::floquet(lat6, 6);
  CHECK(sch6.num_rounds() == 7);
  CHECK(*sch6.round(6).color == Color::R);
  CHECK(sch6.num_slots() == 36 * 7);

  for (int r : {0, 2, 4}) {
    CAPTURE(r);
    CHECK_THROWS_AS(Schedule::floquet(lat, r), Error);
  }
}

TEST_CASE("slot bookkeeping") {
  const auto lat = Lattice::honeycomb(3);
  const auto sch = Schedule::floquet(lat, 3);
  for (int s = 0; s < sch.num_slots(); ++s) {
    const auto& sl = sch.slot(s);
    CHECK(sch.slot_index(sl.round, sl.bond) == s);
  }
  // R bonds are measured in rounds 0 and 3, G and B once.
  for (const auto& b : lat.bonds()) CHECK(sch.slots_of_bond(b.id).size() == (b.color == Color::R ? 2u : 1u));
}

TEST_CASE("bipartition calibration") {
  for (int L : {3, 6, 9, 12}) {
    CAPTURE(L);
    const auto lat = Lattice::honeycomb(L);
    const auto cut = bipartition(lat);
    CHECK(cut.crossing_final_dimers == 2 * L / 3);
    CHECK(count_crossing(lat, cut, lat.bonds_of_color(Color::R)) == 2 * L / 3);
    int in = 0;
    for (char c : cut.in_a) in += c;
    CHECK(in == cut.size_a());
    // Even L gives exactly half; odd L cannot, see the README.
    if (L % 2 == 0) CHECK(cut.size_a() == L * L);
    else CHECK(cut.size_a() == L * (L - 1));
  }
}

TEST_CASE("custom graphs") {
  {
    auto [lat, sch] = build_custom_graph(single_bond_spec(1));
    CHECK(lat.num_sites() == 2);
    CHECK(sch.num_slots() == 1);
    CHECK_FALSE(lat.is_torus());
  }
  {
    auto [lat, sch] = build_custom_graph(single_bond_spec(5));
    CHECK(sch.num_rounds() == 5);
    CHECK(sch.slots_of_bond(0).size() == 5);
  }
  {
    auto [lat, sch] = build_custom_graph(hexagon_spec());
    CHECK(lat.num_sites() == 6);
    CHECK(lat.num_bonds() == 6);
    REQUIRE(sch.windows().size() == 1);
    CHECK(sch.windows()[0].first_round == 0);
    for (const auto& b : lat.bonds()) CHECK(lat.site(b.a).sublattice == 0);
  }
  CustomGraphSpec overlap = hexagon_spec();
  overlap.rounds = {{0, 1}};
  CHECK_THROWS_AS(build_custom_graph(overlap), Error);
  CustomGraphSpec dangling = single_bond_spec(1);
  dangling.bonds.push_back({0, 7, Color::G});
  CHECK_THROWS_AS(build_custom_graph(dangling), Error);
  CustomGraphSpec same_side = single_bond_spec(1);
  same_side.sublattice = {0, 0};
  CHECK_THROWS_AS(build_custom_graph(same_side), Error);
}
