#include "nophish/feature_catalog.hpp"

namespace nophish {

std::optional<Label> label_from_int(long long v) noexcept {
  if (v == -1) return Label::phishing;
  if (v == 1) return Label::legitimate;
  return std::nullopt;
}

std::string_view to_string(Label label) noexcept {
  return label == Label::phishing ? "phishing" : "legitimate";
}

const std::array<FeatureInfo, kFeatureCount>& feature_catalog() noexcept {
  static constexpr std::array<FeatureInfo, kFeatureCount> catalog{{
      {0, "ip_in_host", "Using IP address instead of domain", "having_IP_Address"},
      {1, "url_length", "Long URL to hide the suspicious part", "URL_Length"},
      {2, "shortener", "Using a URL shortening service", "Shortining_Service"},
      {3, "at_symbol", "URL having '@' symbol", "having_At_Symbol"},
      {4, "double_slash_redirect", "Redirecting using '//'", "double_slash_redirecting"},
      {5, "dash_in_domain", "Prefix or suffix separated by '-' in the domain", "Prefix_Suffix"},
      {6, "subdomain_count", "Sub domain and multi sub domains", "having_Sub_Domain"},
      {7, "registration_length", "Domain registration length", "Domain_registeration_length"},
      {8, "favicon", "Favicon loaded from another domain", "Favicon"},
      {9, "https_token", "'https' token in the domain part", "HTTPS_token"},
      {10, "request_url_ratio", "External request URLs", "Request_URL"},
      {11, "anchor_ratio", "URL of anchor", "URL_of_Anchor"},
      {12, "meta_script_link_ratio", "Links in <meta>, <script> and <link> tags", "Links_in_tags"},
      {13, "sfh", "Server form handler", "SFH"},
      {14, "mail_submit", "Submitting information to email", "Submitting_to_email"},
      {15, "abnormal_url", "Abnormal URL (WHOIS identity)", "Abnormal_URL"},
      {16, "invisible_iframe", "IFrame redirection", "Iframe"},
      {17, "domain_age", "Age of domain", "age_of_domain"},
      {18, "dns_record", "DNS record", "DNSRecord"},
      {19, "traffic_rank", "Website traffic", "web_traffic"},
      {20, "google_index", "Google index", "Google_Index"},
      {21, "report_listed", "Statistical-reports based feature", "Statistical_report"},
  }};
  return catalog;
}

std::optional<std::size_t> feature_index(std::string_view id) noexcept {
  for (const auto& info : feature_catalog()) {
    if (info.id == id) return info.index;
  }
  return std::nullopt;
}

}  // namespace nophish
