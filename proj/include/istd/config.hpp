#pragma once

// Plain-text run configuration, one `key = value` per line, `#` comments.
//
//   baseChannels   = 16
//   sigmaRule      = quarter        # or three sigmas: 0.5, 1.0, 1.5
//   matchRadius    = 3
//   thresholdCount = 101
//   topHatRadius   = 4
//   mpcmScales     = 3, 5, 7
//   threads        = 1

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "istd/error.hpp"
#include "istd/gd_bank.hpp"

namespace istd {

struct RunConfig {
  int base_channels = 16;
  SigmaRule sigma_rule = SigmaRule::quarter_support();
  double match_radius = 3.0;
  int threshold_count = 101;
  int top_hat_radius = 4;
  std::vector<int> mpcm_scales{3, 5, 7};
  int threads = 1;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::config, "bad value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  return v;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_number<T>(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = line;
    if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = detail::trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::config, "config line " + std::to_string(line_no) + " is not key = value");
    const auto key = detail::trim(l.substr(0, eq));
    const auto value = detail::trim(l.substr(eq + 1));

    if (key == "baseChannels") {
      cfg.base_channels = detail::parse_number<int>(key, value);
    } else if (key == "sigmaRule") {
      if (value == "quarter") {
        cfg.sigma_rule = SigmaRule::quarter_support();
      } else {
        const auto s = detail::parse_list<double>(key, value);
        if (s.size() != 3 || s[0] <= 0 || s[1] <= 0 || s[2] <= 0)
          fail(ErrorKind::config, "sigmaRule needs 'quarter' or three positive sigmas");
        cfg.sigma_rule.sigmas = {s[0], s[1], s[2]};
      }
    } else if (key == "matchRadius") {
      cfg.match_radius = detail::parse_number<double>(key, value);
      require(cfg.match_radius >= 0.0, "matchRadius must be non-negative");
    } else if (key == "thresholdCount") {
      cfg.threshold_count = detail::parse_number<int>(key, value);
      require(cfg.threshold_count >= 2, "thresholdCount must be at least 2");
    } else if (key == "topHatRadius") {
      cfg.top_hat_radius = detail::parse_number<int>(key, value);
      require(cfg.top_hat_radius >= 0, "topHatRadius must be non-negative");
    } else if (key == "mpcmScales") {
      cfg.mpcm_scales = detail::parse_list<int>(key, value);
      for (int s : cfg.mpcm_scales) require(s >= 1 && s % 2 == 1, "mpcmScales must be odd and positive");
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<int>(key, value);
      require(cfg.threads >= 1, "threads must be at least 1");
    } else {
      fail(ErrorKind::config, "unknown config key '" + std::string(key) + "'");
    }
  }
  require(cfg.base_channels > 0, "baseChannels must be positive");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace istd
