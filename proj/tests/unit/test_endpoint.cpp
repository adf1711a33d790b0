#include <doctest.h>

#include "mllmsent/endpoint.hpp"
#include "mllmsent/error.hpp"

using namespace mllmsent::gateway;

TEST_CASE("per-model generation defaults") {
    auto m = GenerationParams::defaults_for("minigpt4");
    CHECK(m.temperature == doctest::Approx(0.1));
    CHECK(m.num_beams == 1);
    auto g = GenerationParams::defaults_for("gpt4omini");
    CHECK(g.temperature == doctest::Approx(1.0));
    CHECK(g.max_tokens == 300);
    auto d = GenerationParams::defaults_for("deepseek-vl2");
    CHECK(d.max_tokens == 512);
    CHECK(d.repetition_penalty == doctest::Approx(1.1));
    CHECK(d.do_sample == true);
    CHECK(d.top_p == doctest::Approx(0.9));
    CHECK(d.temperature == doctest::Approx(0.1));
    auto other = GenerationParams::defaults_for("llava");
    CHECK_FALSE(other.max_tokens.has_value());
}

TEST_CASE("params json holds only set fields") {
    auto j = to_json(GenerationParams::defaults_for("gpt4omini"));
    CHECK(j.size() == 2);
    CHECK(j["max_tokens"] == 300);
}

TEST_CASE("merge_params overlays and validates") {
    auto p = merge_params(GenerationParams::defaults_for("minigpt4"), {{"temperature", 0.7}, {"max_tokens", 64}});
    CHECK(p.temperature == doctest::Approx(0.7));
    CHECK(p.num_beams == 1);
    CHECK(p.max_tokens == 64);
    CHECK_THROWS_AS(merge_params({}, {{"beam_width", 2}}), mllmsent::InvalidEndpointConfig);
    CHECK_THROWS_AS(merge_params({}, {{"top_p", 1.5}}), mllmsent::InvalidEndpointConfig);
    CHECK_THROWS_AS(merge_params({}, {{"temperature", "hot"}}), mllmsent::InvalidEndpointConfig);
}

TEST_CASE("endpoint validation") {
    EndpointConfig e;
    e.name = "x";
    CHECK_THROWS_AS(e.validate(), mllmsent::InvalidEndpointConfig);
    e.base_url = "http://localhost:1/v1";
    CHECK_NOTHROW(e.validate());
    CHECK(e.wire_model() == "x");
    e.model = "gpt-4o-mini";
    CHECK(e.wire_model() == "gpt-4o-mini");
    e.max_concurrency = 0;
    CHECK_THROWS_AS(e.validate(), mllmsent::InvalidEndpointConfig);
}
