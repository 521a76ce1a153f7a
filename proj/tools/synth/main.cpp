// Generates a labelled 22-feature table from hand-set per-class value
// distributions. The output is a stand-in for real labelled data when none is
// available: it exercises the training pipeline and gives the service a model
// to load. It carries no information about real phishing sites beyond the
// hand-set table below, and metrics measured on it say nothing about
// real-world accuracy.

#include <array>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nophish/dataset.hpp"
#include "nophish/error.hpp"
#include "nophish/rng.hpp"

namespace {

using Dist = std::array<double, 3>;  // P(-1), P(0), P(+1)

struct FeatureDist {
  Dist phishing;
  Dist legitimate;
  bool external;
};

// clang-format off
constexpr std::array<FeatureDist, nophish::kFeatureCount> kTable{{
    {{.25, .00, .75}, {.05, .00, .95}, false},  // ip_in_host
    {{.55, .10, .35}, {.30, .10, .60}, false},  // url_length
    {{.18, .00, .82}, {.08, .00, .92}, false},  // shortener
    {{.20, .00, .80}, {.05, .00, .95}, false},  // at_symbol
    {{.15, .00, .85}, {.05, .00, .95}, false},  // double_slash_redirect
    {{.45, .00, .55}, {.08, .00, .92}, false},  // dash_in_domain
    {{.45, .30, .25}, {.10, .35, .55}, false},  // subdomain_count
    {{.80, .05, .15}, {.35, .05, .60}, true},   // registration_length
    {{.30, .00, .70}, {.10, .00, .90}, false},  // favicon
    {{.20, .00, .80}, {.04, .00, .96}, false},  // https_token
    {{.55, .10, .35}, {.20, .10, .70}, false},  // request_url_ratio
    {{.75, .20, .05}, {.01, .45, .54}, false},  // anchor_ratio
    {{.45, .35, .20}, {.15, .40, .45}, false},  // meta_script_link_ratio
    {{.70, .10, .20}, {.12, .05, .83}, false},  // sfh
    {{.25, .00, .75}, {.04, .00, .96}, false},  // mail_submit
    {{.35, .10, .55}, {.10, .15, .75}, true},   // abnormal_url
    {{.20, .00, .80}, {.05, .00, .95}, false},  // invisible_iframe
    {{.75, .05, .20}, {.25, .05, .70}, true},   // domain_age
    {{.35, .05, .60}, {.04, .03, .93}, true},   // dns_record
    {{.55, .35, .10}, {.15, .30, .55}, true},   // traffic_rank
    {{.30, .05, .65}, {.05, .05, .90}, true},   // google_index
    {{.30, .05, .65}, {.03, .02, .95}, true},   // report_listed
}};
// clang-format on

nophish::Ternary draw(const Dist& d, nophish::Rng& rng) {
  const double u = rng.uniform() * (d[0] + d[1] + d[2]);
  if (u < d[0]) return -1;
  if (u < d[0] + d[1]) return 0;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic labelled feature table (not real data)"};
  std::size_t rows = 11055;
  std::size_t phishing_rows = 4898;
  std::uint64_t seed = 1;
  double label_noise = 0.01;
  std::string out = "-";
  std::string format = "csv";
  app.add_option("--rows", rows, "Total rows")->check(CLI::PositiveNumber);
  app.add_option("--phishing-rows", phishing_rows, "Rows labelled phishing");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--label-noise", label_noise, "Probability of flipping a label")->check(CLI::Range(0.0, 0.5));
  app.add_option("--out", out, "Output path, '-' for stdout");
  app.add_option("--format", format, "csv or arff")->check(CLI::IsMember({"csv", "arff"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (phishing_rows > rows) {
    std::cerr << "error: --phishing-rows exceeds --rows\n";
    return 2;
  }

  try {
    nophish::Rng rng(seed);
    nophish::LabeledDataset ds;
    nophish::FeatureValues values{};
    for (std::size_t i = 0; i < rows; ++i) {
      const bool phishing = i < phishing_rows;
      // A per-row latent: careful attackers copy legitimate-looking traits,
      // small legitimate sites look young and obscure.
      const double latent = rng.uniform();
      for (std::size_t f = 0; f < nophish::kFeatureCount; ++f) {
        const auto& entry = kTable[f];
        const Dist* dist = phishing ? &entry.phishing : &entry.legitimate;
        if (phishing && rng.uniform() < 0.3 * latent) dist = &entry.legitimate;
        if (!phishing && entry.external && rng.uniform() < 0.2 * latent) dist = &entry.phishing;
        values[f] = draw(*dist, rng);
      }
      bool label_phishing = phishing;
      if (rng.uniform() < label_noise) label_phishing = !label_phishing;
      ds.append(values, label_phishing ? nophish::Label::phishing : nophish::Label::legitimate,
                static_cast<std::uint32_t>(i));
    }
    const auto fmt = format == "arff" ? nophish::DataFormat::arff : nophish::DataFormat::csv;
    if (out == "-") {
      nophish::write_dataset(ds, std::cout, fmt);
    } else {
      nophish::save_dataset(ds, out, fmt);
    }
  } catch (const nophish::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  }
  return 0;
}
