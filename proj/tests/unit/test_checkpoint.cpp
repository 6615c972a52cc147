#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "iemppo/checkpoint.hpp"
#include "test_support.hpp"

using namespace iemppo;
using namespace iemppo::nn;

namespace {

bool bit_equal(const ParamSet& a, const ParamSet& b) {
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  return fa.size() == fb.size() && std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(HexFloat, KnownEncodings) {
  EXPECT_EQ(format_hex(1.5), "0x1.8p+0");
  EXPECT_EQ(format_hex(-0.75), "-0x1.8p-1");
  EXPECT_EQ(format_hex(0.0), "0x0p+0");
  EXPECT_EQ(format_hex(-0.0), "-0x0p+0");
  EXPECT_EQ(parse_hex("0x1.999999999999ap-4"), 0.1);
  EXPECT_EQ(parse_hex("-0x1.8p+0"), -1.5);
}

TEST(HexFloat, RoundTripsAwkwardValues) {
  const double values[] = {0.1,
                           -1.0 / 3.0,
                           std::numeric_limits<double>::denorm_min(),
                           std::numeric_limits<double>::min(),
                           std::numeric_limits<double>::max(),
                           -std::numeric_limits<double>::epsilon(),
                           6.02214076e23};
  for (double x : values) {
    const double back = parse_hex(format_hex(x));
    EXPECT_EQ(std::memcmp(&back, &x, sizeof x), 0) << format_hex(x);
  }
  const double nz = parse_hex(format_hex(-0.0));
  EXPECT_TRUE(std::signbit(nz));
}

TEST(HexFloat, RejectsGarbage) {
  EXPECT_THROW(parse_hex("1.5"), ParseError);
  EXPECT_THROW(parse_hex("0x"), ParseError);
  EXPECT_THROW(parse_hex("0x1.8p+0junk"), ParseError);
  EXPECT_THROW(format_hex(std::numeric_limits<double>::infinity()), NumericError);
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = iemppo::testing::random_spec(rng, 64);
    const auto params = iemppo::testing::random_params(spec, rng, 1e3);
    const auto loaded = load_params(save_params(spec, params), spec);
    EXPECT_TRUE(bit_equal(loaded, params));
  }
}

TEST(Checkpoint, WrongSpecIsParseError) {
  MlpSpec spec{3, {4}, 2};
  Rng rng(22);
  const auto doc = save_params(spec, glorot_init(spec, rng));
  EXPECT_THROW(load_params(doc, MlpSpec{3, {5}, 2}), ParseError);
  EXPECT_THROW(load_params(doc, MlpSpec{2, {4}, 2}), ParseError);
}

TEST(Checkpoint, CorruptDocumentsAreParseErrors) {
  MlpSpec spec{2, {2}, 1};
  Rng rng(23);
  const auto doc = save_params(spec, glorot_init(spec, rng));
  EXPECT_THROW(load_params("{not json", spec), ParseError);
  EXPECT_THROW(load_params(doc.substr(0, doc.size() / 2), spec), ParseError);

  auto j = json::parse(doc);
  j["layers"][0]["w"][1] = "0xzz";
  EXPECT_THROW(params_from_json(j, spec), ParseError);
  j = json::parse(doc);
  j["layers"][1]["b"] = json::array();
  EXPECT_THROW(params_from_json(j, spec), ParseError);
  j = json::parse(doc);
  j["layers"].erase(1);
  EXPECT_THROW(params_from_json(j, spec), ParseError);
}

TEST(Checkpoint, HandWrittenDocumentLoadsExactly) {
  // Written by hand, independent of the serializer: w = [[0.1, -2.5]], b = [1/3].
  const char* doc = R"({
    "spec": {"input_dim": 2, "hidden_dims": [], "output_dim": 1,
             "hidden_activation": "tanh", "output_activation": "identity"},
    "layers": [{"w": ["0x1.999999999999ap-4", "-0x1.4p+1"], "b": ["0x1.5555555555555p-2"]}]
  })";
  MlpSpec spec{2, {}, 1};
  const auto p = load_params(doc, spec);
  EXPECT_EQ(p.layers[0].w(0, 0), 0.1);
  EXPECT_EQ(p.layers[0].w(0, 1), -2.5);
  EXPECT_EQ(p.layers[0].b[0], 1.0 / 3.0);
}

TEST(Checkpoint, WeightsAreRowMajor) {
  MlpSpec spec{3, {}, 2};
  auto p = ParamSet::zeros(spec);
  p.layers[0].w << 1, 2, 3, 4, 5, 6;
  const auto j = to_json(spec, p);
  std::vector<double> w;
  for (const auto& s : j["layers"][0]["w"]) w.push_back(parse_hex(s.get<std::string>()));
  EXPECT_EQ(w, (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_TRUE(j["layers"][0].contains("w_decimal"));
}

TEST(Checkpoint, MlpFromJsonRestoresSpecAndParams) {
  Rng rng(24);
  MlpSpec spec{4, {8, 3}, 2};
  const Mlp net(spec, rng);
  const Mlp back = mlp_from_json(to_json(net.spec, net.params));
  EXPECT_EQ(back.spec, spec);
  EXPECT_TRUE(bit_equal(back.params, net.params));
}
