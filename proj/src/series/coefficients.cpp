#include "perturblab/series/fourier_taylor.hpp"

namespace perturblab::series {

std::string GaussRational::str() const {
  if (im == 0) return re.str();
  if (re == 0) return im.str() + "i";
  return re.str() + (im < 0 ? "" : "+") + im.str() + "i";
}

CSeries series_from_json(const nlohmann::json& j) {
  try {
    const int na = j.at("variables").at("angles").get<int>();
    const int nI = j.at("variables").at("actions").get<int>();
    const int trunc = j.contains("truncation") && !j["truncation"].is_null() ? j["truncation"].get<int>() : kNoTruncation;
    CSeries s(na, nI, trunc);
    for (const auto& t : j.at("terms"))
      s.add_term(t.at("k").get<MultiIndex>(), t.at("m").get<MultiIndex>(),
                 cplx(t.at("re").get<double>(), t.at("im").get<double>()));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed series document: ") + e.what());
  }
}

CSeries to_complex(const QSeries& s) {
  CSeries r(s.n_angles(), s.n_actions(), s.truncation());
  for (const auto& [key, c] : s.terms()) r.add_term(key.k, key.m, c.to_complex());
  return r;
}

}  // namespace perturblab::series
