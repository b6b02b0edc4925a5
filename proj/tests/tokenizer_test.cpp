#include <sstream>

#include <gtest/gtest.h>

#include "ivg/error.hpp"
#include "ivg/prompts.hpp"
#include "ivg/rng.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg {
namespace {

TEST(Quantize, Boundaries) {
  EXPECT_EQ(quantize_coord(0.0), 0);
  EXPECT_EQ(quantize_coord(1.0), 999);
  EXPECT_EQ(quantize_coord(0.5005), 500);
  EXPECT_EQ(quantize_coord(0.9999), 999);
  EXPECT_THROW(quantize_coord(-0.001), RangeError);
  EXPECT_THROW(quantize_coord(1.001), RangeError);
}

TEST(Dequantize, BinCenters) {
  EXPECT_DOUBLE_EQ(dequantize_coord(0), 0.0005);
  EXPECT_DOUBLE_EQ(dequantize_coord(999), 0.9995);
  EXPECT_THROW(dequantize_coord(-1), RangeError);
  EXPECT_THROW(dequantize_coord(1000), RangeError);
}

TEST(Quantize, RoundTripErrorOverSweep) {
  constexpr int kPoints = 100000;
  double worst = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double x = static_cast<double>(i) / kPoints;
    worst = std::max(worst, std::abs(dequantize_coord(quantize_coord(x)) - x));
  }
  EXPECT_LE(worst, 5e-4 + 1e-12);
}

TEST(Quantize, Monotone) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    double a = rng.uniform(), b = rng.uniform();
    if (a > b) std::swap(a, b);
    ASSERT_LE(quantize_coord(a), quantize_coord(b));
  }
}

TEST(BoxTokens, EncodeExamples) {
  const Vocab vocab = Vocab::build();
  auto bins = [&](const TokenSequence& ts) {
    std::vector<int> out;
    for (TokenId t : ts) out.push_back(vocab.bin_index(t));
    return out;
  };
  EXPECT_EQ(bins(vocab.encode_box(BBox(0, 0, 1, 1))), (std::vector<int>{0, 0, 999, 999}));
  EXPECT_EQ(bins(vocab.encode_box(BBox(0.25, 0.25, 0.75, 0.75))),
            (std::vector<int>{250, 250, 750, 750}));
  // Both sides inside bin 500.
  EXPECT_THROW(vocab.encode_box(BBox(0.5001, 0.1, 0.5009, 0.2)), MalformedBoxError);
}

TEST(BoxTokens, DecodeExamplesAndErrors) {
  const Vocab vocab = Vocab::build();
  const BBox b = vocab.decode_box({vocab.bin(0), vocab.bin(0), vocab.bin(999), vocab.bin(999)});
  EXPECT_DOUBLE_EQ(b.x_min(), 0.0005);
  EXPECT_DOUBLE_EQ(b.y_min(), 0.0005);
  EXPECT_DOUBLE_EQ(b.x_max(), 0.9995);
  EXPECT_DOUBLE_EQ(b.y_max(), 0.9995);

  EXPECT_THROW(vocab.decode_box({vocab.bin(500), vocab.bin(500), vocab.bin(100), vocab.bin(600)}),
               MalformedBoxError);
  EXPECT_THROW(vocab.decode_box({vocab.bin(1), vocab.bin(2), vocab.bin(3)}), MalformedBoxError);
  const TokenId word = *vocab.find("red");
  EXPECT_THROW(vocab.decode_box({vocab.bin(1), word, vocab.bin(300), vocab.bin(400)}),
               MalformedBoxError);
}

BBox uniform_valid_box(Rng& rng, double min_side) {
  while (true) {
    double x0 = rng.uniform(), x1 = rng.uniform(), y0 = rng.uniform(), y1 = rng.uniform();
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    if (x1 - x0 >= min_side && y1 - y0 >= min_side && x1 <= 1.0 && y1 <= 1.0) {
      return BBox(x0, y0, x1, y1);
    }
  }
}

// Each edge moves by at most 5e-4, so the intersection keeps at least
// (w - 1e-3)(h - 1e-3) and the union fits in (w + 1e-3)(h + 1e-3).
double round_trip_iou_floor(const BBox& b) {
  const double w = b.x_max() - b.x_min(), h = b.y_max() - b.y_min();
  return (w - 1e-3) * (h - 1e-3) / ((w + 1e-3) * (h + 1e-3));
}

TEST(BoxTokens, RoundTripErrorAndIouFloor) {
  const Vocab vocab = Vocab::build();
  Rng rng(77);
  double sum = 0.0;
  constexpr int kBoxes = 1000;
  for (int i = 0; i < kBoxes; ++i) {
    const BBox box = uniform_valid_box(rng, 0.01);
    const BBox back = vocab.decode_box(vocab.encode_box(box));
    for (int k = 0; k < 4; ++k) {
      ASSERT_LE(std::abs(box.coords()[k] - back.coords()[k]), 5e-4 + 1e-12);
    }
    const double v = iou(box, back);
    ASSERT_GE(v, round_trip_iou_floor(box) - 1e-12) << i;
    sum += v;
  }
  EXPECT_GE(sum / kBoxes, 0.99);
}

TEST(BoxTokens, RoundTripIouAtLeast099ForSidesFromPoint4) {
  const Vocab vocab = Vocab::build();
  Rng rng(78);
  for (int i = 0; i < 1000; ++i) {
    const BBox box = uniform_valid_box(rng, 0.4);
    ASSERT_GE(round_trip_iou_floor(box), 0.99 - 1e-12);
    ASSERT_GE(iou(box, vocab.decode_box(vocab.encode_box(box))), 0.99) << i;
  }
}

TEST(BoxTokens, TextForm) {
  const BBox box(0.25, 0.25, 0.75, 0.75);
  EXPECT_EQ(box_to_text(box), "<BIN_250> <BIN_250> <BIN_750> <BIN_750>");
  const auto back = box_from_text(box_to_text(box));
  ASSERT_TRUE(back);
  EXPECT_DOUBLE_EQ(back->x_min(), 0.2505);
  EXPECT_FALSE(box_from_text("<BIN_250> <BIN_250> red <BIN_750>"));
}

TEST(Text, TokenizeRules) {
  const Vocab vocab = Vocab::build();
  const auto ts = vocab.tokenize_text("Is it clear?");
  std::vector<std::string> words;
  for (TokenId t : ts) words.push_back(vocab.token(t));
  EXPECT_EQ(words, (std::vector<std::string>{"is", "it", "clear", "?"}));
  EXPECT_TRUE(vocab.tokenize_text("").empty());
  EXPECT_TRUE(vocab.tokenize_text("   ").empty());
  const auto unk = vocab.tokenize_text("flibbertigibbet");
  ASSERT_EQ(unk.size(), 1u);
  EXPECT_EQ(unk[0], vocab.unk());
}

TEST(Text, PromptRegistryRoundTrips) {
  const Vocab vocab = Vocab::build();
  for (std::string_view p : PromptRegistry::all()) {
    const auto ts = vocab.tokenize_text(p);
    for (TokenId t : ts) EXPECT_NE(t, vocab.unk()) << p;
    EXPECT_EQ(vocab.detokenize_text(ts), normalize_text(p));
  }
  EXPECT_EQ(normalize_text("Be helpful, and answer questions."), "be helpful, and answer questions.");
}

TEST(Text, LengthBudget) {
  const Vocab vocab = Vocab::build();
  std::string long_text;
  for (int i = 0; i < 513; ++i) long_text += "red ";
  EXPECT_THROW(vocab.tokenize_text(long_text), RangeError);
}

TEST(VocabFile, SaveLoadAndDisjointBins) {
  const Vocab vocab = Vocab::build();
  std::stringstream io;
  vocab.save(io);
  const Vocab back = Vocab::load(io);
  ASSERT_EQ(back.size(), vocab.size());
  EXPECT_EQ(back.size(), vocab.text_size() + 1000);
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    const TokenId id{i};
    EXPECT_EQ(back.token(id), vocab.token(id));
    EXPECT_EQ(vocab.is_bin(id), parse_bin_token(vocab.token(id)).has_value());
  }
  EXPECT_EQ(vocab.token(vocab.bin(0)), "<BIN_0>");
  EXPECT_EQ(vocab.token(vocab.bin(999)), "<BIN_999>");

  std::stringstream bad("<BOS>\n<EOS>\n<UNK>\n<SEP>\nred\nred\n");
  EXPECT_THROW(Vocab::load(bad), ValidationError);
}

}  // namespace
}  // namespace ivg
