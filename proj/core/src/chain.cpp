#include "colm/chain.hpp"

#include <sstream>

namespace colm {

ChainSpec::ChainSpec(std::vector<i64> b) : bases(std::move(b)) {
  COLM_CHECK(!bases.empty(), Config, "chain spec needs at least one chain");
  for (i64 c : bases) {
    COLM_CHECK(c >= 1, Config, "chain bases must be >= 1, got " << str());
  }
}

i64 ChainSpec::total() const {
  i64 s = 0;
  for (i64 c : bases) s += c;
  return s;
}

std::string ChainSpec::str() const {
  std::ostringstream oss;
  for (std::size_t i = 0; i < bases.size(); ++i) {
    if (i) oss << ',';
    oss << bases[i];
  }
  return oss.str();
}

ChainSpec ChainSpec::parse(const std::string& s) {
  std::vector<i64> bases;
  std::string cur;
  for (char ch : s) {
    if (ch == '{' || ch == '}' || ch == ' ') continue;
    if (ch == ',') {
      COLM_CHECK(!cur.empty(), Config, "bad chain spec '" << s << "'");
      bases.push_back(std::stoll(cur));
      cur.clear();
    } else {
      COLM_CHECK(ch >= '0' && ch <= '9', Config, "bad chain spec '" << s << "'");
      cur.push_back(ch);
    }
  }
  COLM_CHECK(!cur.empty(), Config, "bad chain spec '" << s << "'");
  bases.push_back(std::stoll(cur));
  return ChainSpec(std::move(bases));
}

i64 ChainDims::prefix_width(i64 active) const {
  COLM_CHECK(active >= 1 && active <= n(), Range,
             "active chain count " << active << " out of [1," << n() << "]");
  return prefix[static_cast<std::size_t>(active - 1)];
}

i64 ChainDims::chain_of(i64 col) const {
  COLM_CHECK(col >= 0 && col < total, Range, "column " << col << " out of width " << total);
  for (i64 i = 0; i < n(); ++i) {
    if (col < prefix[static_cast<std::size_t>(i)]) return i;
  }
  return n() - 1;
}

ChainDims chain_dims(const ChainSpec& spec, i64 d) {
  COLM_CHECK(d >= 1, Shape, "width must be positive, got " << d);
  const i64 s = spec.total();
  ChainDims out;
  out.total = d;
  i64 acc = 0;
  for (i64 c : spec.bases) {
    COLM_CHECK((d * c) % s == 0, Config,
               "width " << d << " not divisible for chain spec {" << spec.str()
                        << "}: " << d << "*" << c << " % " << s << " != 0");
    i64 w = d * c / s;
    out.widths.push_back(w);
    acc += w;
    out.prefix.push_back(acc);
  }
  // Exact splits always re-sum to D.
  COLM_CHECK(acc == d, Internal, "chain split lost width");
  return out;
}

i64 chain_param_count(const ChainSpec& spec, i64 dx, i64 dy, bool biased) {
  ChainDims in = chain_dims(spec, dx);
  ChainDims out = chain_dims(spec, dy);
  i64 count = 0;
  for (i64 i = 0; i < spec.n(); ++i) {
    count += out.widths[static_cast<std::size_t>(i)] * in.prefix[static_cast<std::size_t>(i)];
  }
  if (biased) count += dy;
  return count;
}

Ratio chain_density_ratio(const ChainSpec& spec) {
  const i64 s = spec.total();
  i64 num = 0, pfx = 0;
  for (i64 c : spec.bases) {
    pfx += c;
    num += c * pfx;
  }
  return Ratio{num, s * s};
}

}  // namespace colm
