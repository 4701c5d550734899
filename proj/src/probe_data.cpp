#include "retkit/probes.hpp"

namespace retkit {

const std::vector<std::string>& default_probe_strings() {
  static const std::vector<std::string> strings = {
      "a red apple on a wooden table",
      "sunset over a calm ocean",
      "two dogs playing in the park",
      "a map of the city subway",
      "fresh bread from the corner bakery",
      "a violin solo in an empty hall",
      "snow falling on pine trees",
      "the recipe calls for three eggs",
      "a cyclist climbing a steep hill",
      "old photographs in a shoebox",
      "the train leaves at noon",
      "a lighthouse on a rocky shore",
      "children drawing with chalk",
      "a chess board mid game",
      "rain drumming on a tin roof",
      "the museum opens on sunday",
      "a hawk circling above the field",
      "coffee steam in morning light",
      "a library aisle of worn novels",
      "fireworks over the river bridge",
  };
  return strings;
}

const std::vector<std::pair<std::string, std::string>>& default_synonym_pairs() {
  static const std::vector<std::pair<std::string, std::string>> pairs = {
      {"car", "automobile"}, {"happy", "glad"},       {"big", "large"},
      {"small", "tiny"},     {"fast", "quick"},       {"angry", "mad"},
      {"sad", "unhappy"},    {"smart", "clever"},     {"begin", "start"},
      {"end", "finish"},     {"sick", "ill"},         {"rich", "wealthy"},
      {"cold", "chilly"},    {"street", "road"},      {"house", "home"},
      {"child", "kid"},      {"father", "dad"},       {"mother", "mom"},
      {"gift", "present"},   {"trash", "garbage"},    {"couch", "sofa"},
      {"film", "movie"},     {"photo", "picture"},    {"taxi", "cab"},
      {"shop", "store"},     {"jump", "leap"},        {"shout", "yell"},
      {"speak", "talk"},     {"close", "shut"},       {"buy", "purchase"},
      {"help", "assist"},    {"error", "mistake"},    {"answer", "reply"},
      {"choose", "select"},  {"build", "construct"},  {"fix", "repair"},
      {"idea", "notion"},    {"journey", "trip"},     {"ocean", "sea"},
      {"rock", "stone"},     {"forest", "woods"},     {"quiet", "silent"},
      {"brave", "courageous"}, {"strange", "odd"},    {"tired", "sleepy"},
      {"easy", "simple"},    {"hard", "difficult"},   {"true", "correct"},
      {"funny", "amusing"},  {"cash", "money"},
  };
  return pairs;
}

}  // namespace retkit
