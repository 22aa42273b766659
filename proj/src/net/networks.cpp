#include <stdexcept>

#include "nfce/network.hpp"

namespace nfce::net {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::MsSAN: return "mssan";
    case Variant::SAN: return "san";
    case Variant::CNN: return "cnn";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "mssan") return Variant::MsSAN;
  if (name == "san") return Variant::SAN;
  if (name == "cnn" || name == "cnn-baseline") return Variant::CNN;
  throw std::invalid_argument("unknown network variant '" + name + "' (expected mssan, san or cnn)");
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("network config: " + msg); };
  if (nr < 1 || nt < 1) fail("antenna counts must be positive");
  switch (variant) {
    case Variant::MsSAN: {
      if (nr % 4) fail("Nr=" + std::to_string(nr) + " must be divisible by 4");
      if (embed_features < 1) fail("embed_features must be positive");
      const int widths[4] = {embed_features, 2 * embed_features, 4 * embed_features, embed_features};
      for (int s = 0; s < 4; ++s) {
        if (blocks[s] < 0) fail("block counts must be non-negative");
        if (heads[s] < 1 || widths[s] % heads[s])
          fail("stage " + std::to_string(s + 1) + " width " + std::to_string(widths[s]) + " not divisible by " +
               std::to_string(heads[s]) + " heads");
      }
      break;
    }
    case Variant::SAN:
      if (san_features < 1 || san_blocks < 0) fail("invalid single-scale settings");
      if (san_heads < 1 || san_features % san_heads) fail("san_features not divisible by san_heads");
      break;
    case Variant::CNN:
      if (cnn_features < 1 || cnn_depth < 2) fail("cnn_depth must be >= 2 and cnn_features positive");
      break;
  }
}

template <typename T>
struct Network<T>::Impl {
  // MsSAN
  Conv<T> embed;
  AttentionStage<T> enc1, enc2, enc3;
  AntennaSplit<T> split1, split2;
  AntennaConcat<T> concat2, concat1;
  Conv<T> fuse2, fuse1, skip;
  AttentionStage<T> dec2, dec1, refine;
  Conv<T> reconstruct;
  // SAN
  AttentionStage<T> body;
  // CNN
  std::vector<Conv<T>> layers;
};

template <typename T>
Network<T>::Network(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg), impl_(std::make_unique<Impl>()) {
  cfg_.validate();
  Rng rng = make_stream(seed, stream::kInit);
  Builder<T> b{params_, rng};
  Impl& m = *impl_;
  switch (cfg_.variant) {
    case Variant::MsSAN: {
      const int c = cfg_.embed_features;
      m.embed = Conv<T>(b, "embed", 3, 2, c);
      m.enc1 = AttentionStage<T>(b, "encoder1", c, cfg_.heads[0], cfg_.blocks[0]);
      m.split1 = AntennaSplit<T>(b, "split1", c);
      m.enc2 = AttentionStage<T>(b, "encoder2", 2 * c, cfg_.heads[1], cfg_.blocks[1]);
      m.split2 = AntennaSplit<T>(b, "split2", 2 * c);
      m.enc3 = AttentionStage<T>(b, "encoder3", 4 * c, cfg_.heads[2], cfg_.blocks[2]);
      m.concat2 = AntennaConcat<T>(b, "concat2", 4 * c);
      m.fuse2 = Conv<T>(b, "fuse2", 3, 2 * c, 2 * c, 2 * c);
      m.dec2 = AttentionStage<T>(b, "decoder2", 2 * c, cfg_.heads[1], cfg_.blocks[1]);
      m.concat1 = AntennaConcat<T>(b, "concat1", 2 * c);
      m.fuse1 = Conv<T>(b, "fuse1", 3, c, c, c);
      m.dec1 = AttentionStage<T>(b, "decoder1", c, cfg_.heads[0], cfg_.blocks[0]);
      m.refine = AttentionStage<T>(b, "refine", c, cfg_.heads[3], cfg_.blocks[3]);
      m.skip = Conv<T>(b, "skip", 3, c, c, c);
      m.reconstruct = Conv<T>(b, "reconstruct", 3, c, 2);
      break;
    }
    case Variant::SAN:
      m.embed = Conv<T>(b, "embed", 3, 2, cfg_.san_features);
      m.body = AttentionStage<T>(b, "body", cfg_.san_features, cfg_.san_heads, cfg_.san_blocks);
      m.reconstruct = Conv<T>(b, "reconstruct", 3, cfg_.san_features, 2);
      break;
    case Variant::CNN: {
      const int c = cfg_.cnn_features;
      for (int i = 0; i < cfg_.cnn_depth; ++i) {
        const int cin = i == 0 ? 2 : c;
        const int cout = i + 1 == cfg_.cnn_depth ? 2 : c;
        m.layers.emplace_back(b, "conv" + std::to_string(i), 3, cin, cout);
      }
      break;
    }
  }
}

template <typename T>
Network<T>::~Network() = default;

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, std::vector<StageShape>* trace) const {
  const Shape expected{static_cast<std::size_t>(cfg_.nr), static_cast<std::size_t>(cfg_.nt), 2};
  if (x.shape() != expected)
    throw std::invalid_argument("network input has shape " + ad::shape_string(x.shape()) + ", expected " +
                                ad::shape_string(expected));
  auto mark = [trace](const char* stage, const Tensor<T>& t) {
    if (trace) trace->push_back({stage, t.shape()});
  };
  mark("input", x);
  const Impl& m = *impl_;
  Tensor<T> y;
  switch (cfg_.variant) {
    case Variant::MsSAN: {
      const auto f0 = m.embed(x);
      mark("embed", f0);
      const auto e1 = m.enc1(f0);
      mark("encoder1", e1);
      const auto e2 = m.enc2(m.split1(e1));
      mark("encoder2", e2);
      const auto e3 = m.enc3(m.split2(e2));
      mark("encoder3", e3);
      const auto d2 = m.dec2(m.fuse2(ad::add(e2, m.concat2(e3))));
      mark("decoder2", d2);
      const auto d1 = m.dec1(m.fuse1(ad::add(e1, m.concat1(d2))));
      mark("decoder1", d1);
      const auto r = m.refine(d1);
      mark("refine", r);
      y = m.reconstruct(ad::add(m.skip(f0), r));
      break;
    }
    case Variant::SAN: {
      const auto f0 = m.embed(x);
      mark("embed", f0);
      const auto body = m.body(f0);
      mark("body", body);
      y = m.reconstruct(body);
      break;
    }
    case Variant::CNN: {
      Tensor<T> h = x;
      for (std::size_t i = 0; i + 1 < m.layers.size(); ++i) h = ad::gelu(m.layers[i](h));
      mark("hidden", h);
      y = ad::add(x, m.layers.back()(h));
      break;
    }
  }
  mark("output", y);
  return y;
}

template class Network<float>;
template class Network<double>;

}  // namespace nfce::net
