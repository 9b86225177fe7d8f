// Copyright 2026 The qsrand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "qsrand/io.hpp"
#include "qsrand/random.hpp"

namespace qsrand {
namespace {

using io::Json;

TEST(Format, SeventeenDigits) {
  EXPECT_EQ(io::format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_real(1.0), "1");
  EXPECT_EQ(std::stod(io::format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::spec_hash(Json{{"a", 1}}), io::spec_hash(Json::parse(R"({"a":1})")));
  EXPECT_NE(io::spec_hash(Json{{"a", 1}}), io::spec_hash(Json{{"a", 2}}));
}

TEST(Matrix, RoundTripAndRealEntries) {
  Rng rng(1);
  const auto d = random_density(rng, 2);
  const auto back = io::matrix_from_json(io::matrix_to_json(d.matrix()));
  EXPECT_EQ((back - d.matrix()).cwiseAbs().maxCoeff(), 0.0);
  const auto m = io::matrix_from_json(Json::parse("[[0.5, 0], [0, [0.5, 0]]]"));
  EXPECT_EQ(m(0, 0), Complex(0.5, 0));
  EXPECT_EQ(m(1, 1), Complex(0.5, 0));
  EXPECT_THROW(io::matrix_from_json(Json::parse("[[1, 0], [0]]")), Error);
  EXPECT_THROW(io::matrix_from_json(Json::array()), Error);
}

TEST(Density, RoundTripAllRepresentations) {
  Rng rng(2);
  const std::vector<DensityOperator> ops{random_density(rng, 2), DensityOperator::diagonal({0.7, 0.2, 0.1, 0.0}),
                                         DensityOperator::product({random_density(rng, 1), DensityOperator::diagonal({0.25, 0.25, 0.25, 0.25})})};
  for (const auto& d : ops) {
    const Json j = io::to_json(d);
    const auto back = io::density_from_json(Json::parse(j.dump()));
    EXPECT_EQ(back.qubits(), d.qubits());
    EXPECT_EQ((back.to_matrix() - d.to_matrix()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(io::to_json(back).dump(), j.dump());
  }
}

TEST(Density, Errors) {
  EXPECT_THROW(io::density_from_json(Json::parse(R"({"repr":"sparse","data":[]})")), Error);
  EXPECT_THROW(io::density_from_json(Json::parse(R"({"repr":"diag","qubits":2,"data":[0.5,0.5]})")), Error);
  try {
    io::density_from_json(Json::parse(R"({"repr":"diag","data":[0.6,0.6]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWrongTrace);
  }
}

TEST(ProjectionJson, RoundTrip) {
  Rng rng(3);
  const std::vector<Projection> ps{Projection::basis_subset(3, {0, 5, 6}), random_projection(rng, 2, 2),
                                   Projection::product({Projection::basis_subset(1, {1}), Projection::identity(2)})};
  for (const auto& g : ps) {
    const auto back = io::projection_from_json(Json::parse(io::to_json(g).dump()));
    EXPECT_EQ(back.qubits(), g.qubits());
    EXPECT_EQ(back.rank(), g.rank());
    EXPECT_LT((back.to_matrix() - g.to_matrix()).cwiseAbs().maxCoeff(), 1e-15);
  }
  EXPECT_THROW(io::projection_from_json(Json::parse(R"({"repr":"x","qubits":1})")), Error);
}

TEST(Builtin, Parse) {
  const Json j = io::parse_builtin("builtin:tensor_power(N=20, diag=0.9;0.1)");
  EXPECT_EQ(j.at("kind"), "tensor_power");
  EXPECT_EQ(j.at("N"), 20);
  EXPECT_EQ(j.at("diag"), Json::parse("[0.9, 0.1]"));
  EXPECT_EQ(io::parse_builtin("builtin:tracial").at("kind"), "tracial");
  EXPECT_EQ(io::parse_builtin("builtin:pure(bits=0110)").at("bits"), "0110");
  EXPECT_THROW(io::parse_builtin("builtin:block(N=3"), Error);
  EXPECT_THROW(io::parse_builtin("builtin:block(N)"), Error);
}

TEST(Builtin, StatesMatchDirectConstructors) {
  const auto a = io::load_state("builtin:block(N=12)", 5);
  const auto b = block_state(12);
  EXPECT_EQ(a.max_depth(), 12);
  for (int n = 1; n <= 12; ++n) EXPECT_EQ(max_abs_diff(a.at(n), b.at(n)), 0.0);
  EXPECT_EQ(io::load_state("builtin:tracial", 7).max_depth(), 7);
  const auto p = io::load_state("builtin:pure(pattern=01)", 6);
  EXPECT_EQ(p.at(4).probabilities()[0b0101], 1.0);
  const auto m = io::load_state("builtin:measure(density=f2,N=8)", 0);
  EXPECT_EQ(m.at(8).probabilities(), measure_state(DensitySpec::f2(), 8).at(8).probabilities());
  EXPECT_THROW(io::load_state("builtin:nonsense", 3), Error);
  EXPECT_THROW(io::load_state("/nonexistent/state.json", 3), Error);
}

TEST(StateJson, ConstructorReplay) {
  const auto s = io::load_state("builtin:tensor_power(N=10,diag=0.9;0.1)", 0);
  const Json j = io::to_json(s);
  ASSERT_TRUE(j.contains("constructor"));
  EXPECT_FALSE(j.contains("data"));
  const auto back = io::state_from_json(Json::parse(j.dump()), 0);
  EXPECT_EQ(back.max_depth(), 10);
  for (int n = 1; n <= 10; ++n) EXPECT_EQ(max_abs_diff(back.at(n), s.at(n)), 0.0);
  EXPECT_EQ(io::to_json(back).dump(), j.dump());
}

TEST(StateJson, ExplicitData) {
  const auto s = tracial_state(3);
  Json j{{"name", "explicit"}, {"data", Json::array()}};
  for (int n = 1; n <= 3; ++n) j["data"].push_back(io::to_json(s.at(n)));
  const auto back = io::state_from_json(j, 0);
  EXPECT_EQ(back.max_depth(), 3);
  EXPECT_TRUE(check_coherence(back, 3, 1e-12).pass());
  EXPECT_TRUE(io::to_json(back).contains("data"));
}

TEST(TestJson, BuiltTestRoundTrip) {
  const auto rho = pure_bitstring_state(BitSource::seeded(4), 20);
  const auto built = build_entropy_deficiency_test(rho, Rational(1, 2), Rational(1, 2), 4, 20);
  ASSERT_EQ(built.terms.size(), 4u);
  const Json j = io::to_json(built);
  EXPECT_TRUE(j.at("exhausted_at").is_null());
  const auto loaded = io::test_from_json(Json::parse(j.dump()));
  EXPECT_EQ(loaded.kind, built.kind);
  EXPECT_TRUE(std::holds_alternative<GeometricBudget>(loaded.certificate));
  const auto report = evaluate_failure(rho, loaded.seq, 0.5, 4);
  EXPECT_EQ(report.witnesses, (std::vector<int>{1, 2, 3, 4}));
}

TEST(TestJson, ExhaustedIsRecorded) {
  const auto built = build_entropy_deficiency_test(tracial_state(20), Rational(1, 2), Rational(1, 2), 4, 20);
  EXPECT_EQ(io::to_json(built).at("exhausted_at"), 1);
}

TEST(TestJson, SequenceExportAndCertificates) {
  const auto t = block_qstest(3);
  Json j = io::to_json(t.seq, "qs", 3);
  const auto a = io::test_from_json(j);
  EXPECT_EQ(a.seq.max_terms(), 3);
  EXPECT_EQ(a.seq.term(3).qubits, xi(3));
  j["certificate"] = {{"type", "partial_sums"}, {"sums", {0.5, 0.75, 0.875}}};
  EXPECT_TRUE(std::holds_alternative<PartialSumBudget>(io::test_from_json(j).certificate));
  j.erase("certificate");
  EXPECT_TRUE(std::holds_alternative<UnverifiedBudget>(io::test_from_json(j).certificate));
  j["kind"] = "bogus";
  EXPECT_THROW(io::test_from_json(j), Error);
  j["kind"] = "qs";
  std::swap(j["terms"][0], j["terms"][1]);
  EXPECT_THROW(io::test_from_json(j), Error);
}

TEST(Csv, HeaderAndRows) {
  std::ostringstream out;
  const Json spec{{"command", "x"}, {"N", 2}};
  io::CsvWriter w(out, spec, {"n", "H"});
  w.row({1, 0.1});
  w.row(std::vector<std::string>{"2", "1"});
  w.comment("done");
  const std::string expect = "# spec_hash=" + io::spec_hash(spec) + " spec=" + spec.dump() +
                             "\nn,H\n1,0.10000000000000001\n2,1\n# done\n";
  EXPECT_EQ(out.str(), expect);
  EXPECT_THROW(w.row({1}), Error);
}

TEST(Csv, ReplayIsByteIdentical) {
  auto render = [] {
    std::ostringstream out;
    const auto s = io::load_state("builtin:measure(density=f1,N=12)", 0);
    const auto prof = entropy_profile(s, 12);
    io::CsvWriter w(out, io::to_json(s), {"n", "H", "H_over_n"});
    for (const auto& e : prof.entries) w.row({e.n, e.entropy, e.rate});
    return out.str();
  };
  EXPECT_EQ(render(), render());
}

}  // namespace
}  // namespace qsrand
