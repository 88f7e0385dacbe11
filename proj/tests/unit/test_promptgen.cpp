// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <map>
#include <set>
#include <thread>

#include "mmimpute/error.hpp"
#include "mmimpute/promptgen.hpp"
#include "test_util.hpp"

using namespace mmimpute;
using mmimpute::testing::TempDir;

namespace {

std::map<std::string, int> count_by(const std::vector<PromptSpec>& specs, int cls,
                                    std::string PromptSpec::*field) {
  std::map<std::string, int> out;
  for (const auto& s : specs) {
    if (s.class_index == cls) ++out[s.*field];
  }
  return out;
}

}  // namespace

TEST_CASE("prompts: label template") {
  CHECK(build_label_prompt("running", "a man") == "A photo of a man running");
  CHECK(build_label_prompt("playing guitar", "a group of people") == "A photo of a group of people playing guitar");
}

TEST_CASE("prompts: domain template") {
  CHECK(build_domain_prompt("hiking", "a man", "sketch") == "A sketch of a man hiking");
  CHECK(build_domain_prompt("running", "a woman", "3D rendering") == "A 3D rendering of a woman running");
  CHECK(build_domain_prompt("running", "a man", "photo") == build_label_prompt("running", "a man"));
  CHECK_THROWS_AS(build_domain_prompt("running", "a man", "watercolour"), ValidationError);
  CHECK_THROWS_AS(build_domain_prompt("running", "a man", "sketch", DomainSet::single()), ValidationError);
}

TEST_CASE("prompts: LLM request template") {
  CHECK(build_llm_request("archery") == "Provide 5 definitions of action class archery");
  CHECK_THROWS_AS(build_llm_request(""), ValidationError);
}

TEST_CASE("prompt sets: defaults") {
  CHECK(PerformerSet::defaults().performers ==
        std::vector<std::string>{"a man", "a woman", "a child", "a person", "a group of people"});
  CHECK(PerformerSet::restricted().performers == std::vector<std::string>{"a man", "a woman"});
  CHECK(DomainSet::single().domains == std::vector<std::string>{"photo"});
  const auto multi = DomainSet::multi_domain().domains;
  CHECK(multi.size() == 10);
  CHECK(multi.front() == "photo");
  CHECK(std::set<std::string>(multi.begin(), multi.end()).size() == 10);
}

TEST_CASE("LLM response parsing") {
  SUBCASE("numbered") {
    const auto d = parse_llm_definitions("Here you go:\n1. first one\n2) second\n3: third\n(4) fourth\n5. fifth\n6. sixth");
    CHECK(d == std::vector<std::string>{"first one", "second", "third", "fourth", "fifth"});
  }
  SUBCASE("bullets") {
    const auto d = parse_llm_definitions("- alpha\n* beta\n  + gamma  \n\xE2\x80\xA2 delta");
    CHECK(d == std::vector<std::string>{"alpha", "beta", "gamma", "delta"});
  }
  SUBCASE("nothing parses") {
    try {
      parse_llm_definitions("I cannot help with that.");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("I cannot help with that.") != std::string::npos);
    }
  }
}

TEST_CASE("guidance policy validation") {
  CHECK_THROWS_AS(GuidanceScalePolicy::fixed(0.0).validate(), ValidationError);
  CHECK_THROWS_AS(GuidanceScalePolicy::uniform(5, 1).validate(), ValidationError);
  CHECK_NOTHROW(GuidanceScalePolicy::uniform().validate());
}

TEST_CASE("batch: balanced performers and domains within one of each other") {
  const std::vector<std::string> classes{"running", "hiking", "sitting"};
  for (int per_class : {1, 7, 100, 101}) {
    PromptBatchOptions o;
    o.per_class = per_class;
    o.strategy = PromptStrategy::label_multidomain;
    o.domains = DomainSet::multi_domain();
    o.seed = 11;
    const auto specs = enumerate_prompt_batch(classes, o);
    REQUIRE(specs.size() == classes.size() * per_class);
    for (int c = 0; c < 3; ++c) {
      const auto performers = count_by(specs, c, &PromptSpec::performer);
      const auto domains = count_by(specs, c, &PromptSpec::domain);
      const int plo = per_class / 5, phi = (per_class + 4) / 5;
      for (const auto& p : o.performers.performers) {
        const int n = performers.contains(p) ? performers.at(p) : 0;
        CHECK(n >= plo);
        CHECK(n <= phi);
      }
      const int dlo = per_class / 10, dhi = (per_class + 9) / 10;
      for (const auto& d : o.domains.domains) {
        const int n = domains.contains(d) ? domains.at(d) : 0;
        CHECK(n >= dlo);
        CHECK(n <= dhi);
      }
    }
  }
}

TEST_CASE("batch: 100 per class over ten domains is exactly 10 each") {
  PromptBatchOptions o;
  o.strategy = PromptStrategy::label_multidomain;
  o.domains = DomainSet::multi_domain();
  const auto specs = enumerate_prompt_batch({"running"}, o);
  for (const auto& [domain, n] : count_by(specs, 0, &PromptSpec::domain)) CHECK_MESSAGE(n == 10, domain);
  for (const auto& [performer, n] : count_by(specs, 0, &PromptSpec::performer)) CHECK(n == 20);
  for (const auto& s : specs) CHECK(s.text == build_domain_prompt("running", s.performer, s.domain));
}

TEST_CASE("batch: class-major order, texts and fixed guidance") {
  PromptBatchOptions o;
  o.per_class = 4;
  const auto specs = enumerate_prompt_batch({"a", "b"}, o);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(specs[i].class_index == static_cast<int>(i / 4));
    CHECK(specs[i].domain == "photo");
    CHECK(specs[i].guidance_scale == 5.0);
    CHECK(specs[i].text == build_label_prompt(i < 4 ? "a" : "b", specs[i].performer));
  }
}

TEST_CASE("batch: determinism and seed sensitivity") {
  PromptBatchOptions o;
  o.per_class = 30;
  o.guidance = GuidanceScalePolicy::uniform();
  o.seed = 5;
  const auto a = enumerate_prompt_batch({"x", "y"}, o);
  CHECK(enumerate_prompt_batch({"x", "y"}, o) == a);
  o.seed = 6;
  CHECK(enumerate_prompt_batch({"x", "y"}, o) != a);
}

TEST_CASE("batch: generation seeds are distinct") {
  PromptBatchOptions o;
  o.per_class = 500;
  const auto specs = enumerate_prompt_batch({"a", "b", "c", "d"}, o);
  std::set<std::uint64_t> seeds;
  for (const auto& s : specs) seeds.insert(s.generation_seed);
  CHECK(seeds.size() == specs.size());
}

TEST_CASE("batch: random guidance stays in [1, 5] and covers the range") {
  PromptBatchOptions o;
  o.per_class = 10000;
  o.guidance = GuidanceScalePolicy::uniform();
  const auto specs = enumerate_prompt_batch({"a"}, o);
  double lo = 10, hi = 0, sum = 0;
  for (const auto& s : specs) {
    lo = std::min(lo, s.guidance_scale);
    hi = std::max(hi, s.guidance_scale);
    sum += s.guidance_scale;
  }
  CHECK(lo >= 1.0);
  CHECK(hi <= 5.0);
  CHECK(lo < 1.01);
  CHECK(hi > 4.99);
  // mean 3, sd of the mean 4/sqrt(12)/100 ~ 0.0115
  CHECK(std::abs(sum / specs.size() - 3.0) < 0.05);
}

TEST_CASE("batch: invalid options") {
  PromptBatchOptions o;
  o.per_class = 0;
  CHECK_THROWS_AS(enumerate_prompt_batch({"a"}, o), ValidationError);
  o.per_class = 3;
  o.domains = DomainSet::multi_domain();
  CHECK_THROWS_AS(enumerate_prompt_batch({"a"}, o), ValidationError);  // label strategy with ten domains
  o.domains = DomainSet::single();
  o.strategy = PromptStrategy::llm_assisted;
  CHECK_THROWS_AS(enumerate_prompt_batch({"a"}, o), ValidationError);
  const LlmDefinitions defs{{"a", {"da"}}};
  CHECK_THROWS_AS(enumerate_prompt_batch({"a", "b"}, o, &defs), ValidationError);
}

TEST_CASE("batch: LLM-assisted prompts use each definition evenly") {
  const LlmDefinitions defs{{"run", {"d1", "d2", "d3", "d4", "d5"}}};
  PromptBatchOptions o;
  o.strategy = PromptStrategy::llm_assisted;
  o.per_class = 25;
  const auto specs = enumerate_prompt_batch({"run"}, o, &defs);
  for (const auto& [text, n] : count_by(specs, 0, &PromptSpec::text)) CHECK(n == 5);
}

TEST_CASE("LLM definitions: cache is consulted before the client") {
  TempDir dir("llm");
  const auto cache = dir / "defs.jsonl";
  CannedTextClient client({{build_llm_request("run"), "1. moving fast\n2. jogging"}});
  auto first = fetch_llm_definitions({"run", "sit"}, client, cache);
  CHECK(client.calls() == 2);
  CHECK(first.at("run") == std::vector<std::string>{"moving fast", "jogging"});
  CHECK(first.at("sit").size() == 5);

  CannedTextClient second_client;
  auto second = fetch_llm_definitions({"run", "sit"}, second_client, cache);
  CHECK(second_client.calls() == 0);
  CHECK(second == first);
  const auto entries = load_llm_cache(cache);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].backend == "canned");
  CHECK_FALSE(entries[0].timestamp.empty());
}

TEST_CASE("HTTP text client round trip") {
  httplib::Server server;
  std::string seen;
  server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body).at("prompt").get<std::string>();
    res.set_content(nlohmann::json{{"text", "1. a\n2. b"}}.dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpTextClient client("http://127.0.0.1:" + std::to_string(port) + "/v1/complete");
  CHECK(parse_llm_definitions(client.complete(build_llm_request("run"))) == std::vector<std::string>{"a", "b"});
  CHECK(seen == "Provide 5 definitions of action class run");
  HttpTextClient broken("http://127.0.0.1:" + std::to_string(port) + "/broken");
  CHECK_THROWS_AS(broken.complete("x"), BackendError);

  server.stop();
  t.join();
}
