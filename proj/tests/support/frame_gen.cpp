#include "frame_gen.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hexsim::testsupport {

using e2lite::Frame;
using e2lite::json;
using e2lite::MsgType;

json random_value(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, depth > 0 ? 6 : 4);
  switch (kind(rng)) {
    case 0: return nullptr;
    case 1: return std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    case 2: return std::uniform_int_distribution<std::int64_t>(-1'000'000'000'000, 1'000'000'000'000)(rng);
    case 3: return std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
    case 4: {
      static const std::vector<std::string> words{"", "slice", "ue\n\"quoted\"", "\xc3\xa9t\xc3\xa9", "rb/106",
                                                  "\\back", "\x01ctl"};
      return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
    }
    case 5: {
      json a = json::array();
      const int n = std::uniform_int_distribution<int>(0, 4)(rng);
      for (int i = 0; i < n; ++i) a.push_back(random_value(rng, depth - 1));
      return a;
    }
    default: {
      json o = json::object();
      const int n = std::uniform_int_distribution<int>(0, 4)(rng);
      for (int i = 0; i < n; ++i) o["k" + std::to_string(i)] = random_value(rng, depth - 1);
      return o;
    }
  }
}

Frame random_frame(std::mt19937_64& rng) {
  Frame f;
  f.msg_type = static_cast<MsgType>(std::uniform_int_distribution<int>(1, 13)(rng));
  f.correlation_id = static_cast<std::uint32_t>(rng());
  f.payload = random_value(rng, 3);
  return f;
}

}  // namespace hexsim::testsupport
