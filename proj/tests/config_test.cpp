#include "doctest.h"

#include "svt/config.hpp"

using namespace svt;

TEST_CASE("defaults are documented values") {
    const auto cfg = WorkbenchConfig::defaults();
    CHECK(cfg.neuron.beta == 0.5);
    CHECK(cfg.neuron.u_th == 1.0);
    CHECK(cfg.neuron.alpha == 2.0);
    CHECK(cfg.cost.e_mac_pj == 4.6);
    CHECK(cfg.cost.e_ac_pj == 0.9);
    CHECK(cfg.backbone.base_channels == 8);
    CHECK(cfg.backbone.t == 4);
    CHECK(cfg.backbone.height == 32);
    CHECK(cfg.training.epochs == 30);
}

TEST_CASE("parse sections and values") {
    const auto cfg = WorkbenchConfig::parse(R"(
# comment
[neuron]
beta = 0.25
u_th = 2.0
surrogate = rectangular
alpha = 1.5

[attention]
variant = factorized
score = dot
T = 4
N = 16
D = 32
M = 4

[backbone]
base_channels = 4
H = 64
W = 64

[cost]
e_mac_pj = 5.0

[training]
epochs = 3
seed = 42
lr = 0.05
)");
    CHECK(cfg.neuron.beta == 0.25);
    CHECK(cfg.neuron.u_th == 2.0);
    CHECK(cfg.neuron.surrogate == Surrogate::Rectangular);
    CHECK(cfg.attention.variant == AttentionVariant::Factorized);
    CHECK(cfg.attention.score == ScoreKind::Dot);
    CHECK(cfg.attention.d == 32);
    CHECK(cfg.backbone.base_channels == 4);
    CHECK(cfg.backbone.height == 64);
    CHECK(cfg.cost.e_mac_pj == 5.0);
    CHECK(cfg.training.epochs == 3);
    CHECK(cfg.training.seed == 42);
    CHECK(cfg.training.options.lr == 0.05);
    // The neuron section threads into the attention and backbone configs.
    CHECK(cfg.backbone.neuron.beta == 0.25);
    CHECK(cfg.attention.neuron.u_th == 2.0);
}

TEST_CASE("unknown keys and sections are rejected") {
    CHECK_THROWS_AS(WorkbenchConfig::parse("[nope]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(WorkbenchConfig::parse("[neuron]\nnot_a_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(WorkbenchConfig::parse("key_without_section = 1\n"), ConfigError);
    CHECK_THROWS_AS(WorkbenchConfig::parse("[neuron]\nbeta = abc\n"), ConfigError);
    CHECK_THROWS_AS(WorkbenchConfig::parse("[neuron]\nbeta\n"), ConfigError);
    CHECK_THROWS_AS(WorkbenchConfig::parse("[neuron]\nbeta = 7\n"), DomainError);
}
