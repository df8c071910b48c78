#include <catch2/catch_amalgamated.hpp>

#include "aid/task.hpp"

using namespace aid;

TEST_CASE("mask helpers") {
    Mask m;
    m.bits = {1, 0, 0, 1};
    REQUIRE(m.dimension() == 4);
    REQUIRE(m.missing_count() == 2);
    REQUIRE(m.missing_fraction() == Catch::Approx(0.5));
    m.validate();
    m.bits[1] = 2;
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("apply_mask projects onto visible or missing coordinates") {
    Mask m;
    m.bits = {1, 0, 1};
    Vec x = {3.0, 4.0, 5.0};
    Vec vis = apply_mask(m, x, true);
    Vec mis = apply_mask(m, x, false);
    REQUIRE(vis == Vec{3.0, 0.0, 5.0});
    REQUIRE(mis == Vec{0.0, 4.0, 0.0});
    // the two projections partition x
    REQUIRE(add(vis, mis) == x);
}

TEST_CASE("center mask blanks the central block") {
    Rng rng(1);
    Mask m = sample_mask(MaskFamily::center, 8, 8, rng);
    REQUIRE(m.missing_count() == 16);  // 4x4 block of an 8x8 image
    for (int r = 2; r < 6; ++r)
        for (int c = 2; c < 6; ++c) REQUIRE(m.bits[static_cast<std::size_t>(r * 8 + c)] == 0);
    REQUIRE(m.bits[0] == 1);
}

TEST_CASE("strip mask blanks a full-height vertical band") {
    Rng rng(1);
    Mask m = sample_mask(MaskFamily::strip, 8, 8, rng);
    REQUIRE(m.missing_count() == 16);  // width/4 = 2 columns
    for (int r = 0; r < 8; ++r) {
        REQUIRE(m.bits[static_cast<std::size_t>(r * 8 + 3)] == 0);
        REQUIRE(m.bits[static_cast<std::size_t>(r * 8 + 4)] == 0);
        REQUIRE(m.bits[static_cast<std::size_t>(r * 8 + 0)] == 1);
    }
}

TEST_CASE("freeform masks stay inside the stated missing range") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        Mask m = sample_mask(MaskFamily::freeform, 8, 8, rng);
        REQUIRE(m.missing_fraction() >= 0.2 - 1e-12);
        REQUIRE(m.missing_fraction() <= 0.6 + 1e-12);
    }
}

TEST_CASE("sampled task is internally consistent") {
    ScoreBackbone b = single_gaussian(Vec(64, 0.5), 0.05);
    Rng rng(3);
    Task t = sample_task(b, MaskFamily::freeform, 8, 8, rng);
    t.validate();
    for (std::size_t i = 0; i < t.observation.size(); ++i) {
        if (t.mask.bits[i] == 1)
            REQUIRE(t.observation[i] == t.clean[i]);
        else
            REQUIRE(t.observation[i] == 0.0);
    }
}

TEST_CASE("terminal loss splits by mask region") {
    Task t;
    t.mask.bits = {1, 0};
    t.clean = {1.0, 2.0};
    t.observation = {1.0, 0.0};
    TerminalWeights w;
    w.alpha_vis = 2.0;
    w.alpha_hole = 1.0;
    Vec x = {1.5, 3.0};  // errors 0.5 visible, 1.0 hidden
    // 0.5*2*0.25 + 0.5*1*1 = 0.25 + 0.5
    REQUIRE(terminal_loss(w, x, t) == Catch::Approx(0.75).epsilon(1e-12));
    REQUIRE(centered_terminal(w, x, t, 1e-3, 1.0) == Catch::Approx(0.75 - 1e-3).epsilon(1e-12));
}

TEST_CASE("terminal weights must not both vanish") {
    TerminalWeights w;
    w.alpha_vis = 0.0;
    w.alpha_hole = 0.0;
    REQUIRE_THROWS_AS(w.validate(), std::invalid_argument);
    w.alpha_hole = -1.0;
    REQUIRE_THROWS_AS(w.validate(), std::invalid_argument);
}

TEST_CASE("mask family names round-trip") {
    for (auto f : {MaskFamily::freeform, MaskFamily::center, MaskFamily::strip})
        REQUIRE(mask_family_from_string(to_string(f)) == f);
    REQUIRE_THROWS_AS(mask_family_from_string("blob"), std::invalid_argument);
}
