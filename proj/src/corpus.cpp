#include "videonav/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "videonav/errors.hpp"

namespace videonav {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array kSubjects{"chef",   "dancer", "pilot", "child",  "farmer",  "singer",
                               "guard",  "nurse",  "painter", "runner", "teacher", "clown",
                               "sailor", "driver", "doctor", "juggler"};
constexpr std::array kObjects{"umbrella", "guitar", "basket", "lantern", "kite",   "bicycle",
                              "suitcase", "camera", "ladder", "trumpet", "bucket", "hammer",
                              "balloon",  "book",   "drum",   "shovel"};
constexpr std::array kPlaces{"bridge",  "market", "kitchen", "garden",  "station",   "harbor",
                             "stage",   "library", "rooftop", "forest", "beach",     "tunnel",
                             "courtyard", "plaza", "warehouse", "chapel"};
constexpr std::array kVerbs{"carries", "repairs", "drops", "lifts",
                            "paints",  "throws",  "hides", "cleans"};
constexpr std::array kColors{"red",   "blue",  "green",  "yellow",
                             "black", "white", "orange", "purple"};

struct Triple {
    std::size_t subject, object, place;
    friend bool operator==(const Triple&, const Triple&) = default;
};

template <std::size_t N>
std::size_t pick(std::mt19937_64& rng, const std::array<const char*, N>&) {
    return std::uniform_int_distribution<std::size_t>(0, N - 1)(rng);
}

Triple random_triple(std::mt19937_64& rng) {
    return {pick(rng, kSubjects), pick(rng, kObjects), pick(rng, kPlaces)};
}

std::string describe(const Triple& t, std::size_t verb) {
    const std::string_view object = kObjects[t.object];
    const bool vowel = std::string_view("aeiou").find(object.front()) != std::string_view::npos;
    return fmt::format("the {} {} {} {} near the {}", kSubjects[t.subject], kVerbs[verb],
                       vowel ? "an" : "a", object, kPlaces[t.place]);
}

std::vector<std::string> keywords_of(const Triple& t) {
    return {kSubjects[t.subject], kObjects[t.object], kPlaces[t.place]};
}

void check_interval(const std::string& field, const Interval& iv, double duration) {
    if (!std::isfinite(iv.start) || !std::isfinite(iv.end)) {
        throw ValidationError(field, "interval endpoints must be finite");
    }
    if (iv.start >= iv.end) throw ValidationError(field, "interval start ≥ end");
    if (iv.start < 0.0 || iv.end > duration) {
        throw ValidationError(field, fmt::format("interval {} outside [0, {})", to_string(iv),
                                                 duration));
    }
}

ordered_json interval_json(const Interval& iv) { return ordered_json::array({iv.start, iv.end}); }

Interval interval_from(const ordered_json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw std::invalid_argument("interval must be [start_s, end_s]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

ordered_json video_json(const GroundedVideo& v) {
    ordered_json events = ordered_json::array();
    for (const auto& e : v.events) {
        events.push_back({{"interval", interval_json(e.interval)},
                          {"description", e.description},
                          {"keywords", e.keywords}});
    }
    ordered_json qa = ordered_json::array();
    for (const auto& q : v.qa) {
        ordered_json clue = ordered_json::array();
        for (const auto& iv : q.clue) clue.push_back(interval_json(iv));
        qa.push_back({{"id", q.id},
                      {"question", q.question},
                      {"choices", q.choices},
                      {"answer_index", q.answer_index},
                      {"clue", clue},
                      {"hint_texts", q.hint_texts}});
    }
    return {{"schema", kCorpusSchema},
            {"id", v.id},
            {"duration_s", v.duration_s},
            {"events", events},
            {"qa", qa}};
}

GroundedVideo video_from(const ordered_json& j) {
    if (j.at("schema").get<std::string>() != kCorpusSchema) {
        throw std::invalid_argument("unsupported schema " + j.at("schema").dump());
    }
    GroundedVideo v;
    v.id = j.at("id").get<std::string>();
    v.duration_s = j.at("duration_s").get<double>();
    for (const auto& e : j.at("events")) {
        Event ev;
        ev.interval = interval_from(e.at("interval"));
        ev.description = e.at("description").get<std::string>();
        ev.keywords = e.at("keywords").get<std::vector<std::string>>();
        v.events.push_back(std::move(ev));
    }
    std::size_t qi = 0;
    for (const auto& q : j.at("qa")) {
        GroundedQA qa;
        qa.id = q.at("id").get<std::string>();
        qa.question = q.at("question").get<std::string>();
        qa.choices = q.at("choices").get<std::vector<std::string>>();
        qa.answer_index = q.at("answer_index").get<int>();
        std::vector<Interval> clue;
        std::size_t ci = 0;
        for (const auto& c : q.at("clue")) {
            const auto iv = interval_from(c);
            // Reject inverted intervals before normalization would drop or reject them.
            if (!(iv.start < iv.end)) {
                throw ValidationError(fmt::format("qa[{}].clue[{}]", qi, ci),
                                      "interval start ≥ end");
            }
            clue.push_back(iv);
            ++ci;
        }
        qa.clue = IntervalSet(clue);
        qa.hint_texts = q.at("hint_texts").get<std::vector<std::string>>();
        v.qa.push_back(std::move(qa));
        ++qi;
    }
    return v;
}

}  // namespace

std::size_t Corpus::qa_count() const noexcept {
    std::size_t n = 0;
    for (const auto& v : videos) n += v.qa.size();
    return n;
}

std::vector<TaskRef> enumerate_tasks(const Corpus& corpus) {
    std::vector<TaskRef> out;
    for (std::size_t v = 0; v < corpus.videos.size(); ++v) {
        for (std::size_t q = 0; q < corpus.videos[v].qa.size(); ++q) out.push_back({v, q});
    }
    return out;
}

void validate_params(const CorpusParams& p) {
    if (!(p.duration_min_s >= 32.0) || !(p.duration_max_s >= p.duration_min_s) ||
        !std::isfinite(p.duration_max_s)) {
        throw ConfigError(fmt::format("duration range [{}, {}] invalid (need 32 <= min <= max)",
                                      p.duration_min_s, p.duration_max_s));
    }
    if (p.events_min < 1 || p.events_max < p.events_min) {
        throw ConfigError(fmt::format("events range [{}, {}] empty", p.events_min, p.events_max));
    }
    const double len_lo = std::ceil(p.event_length_min_s);
    const double len_hi = std::floor(p.event_length_max_s);
    if (len_lo < 1.0 || len_hi < len_lo || len_hi >= p.duration_min_s) {
        throw ConfigError(fmt::format("event length range [{}, {}] empty or too long",
                                      p.event_length_min_s, p.event_length_max_s));
    }
    if (p.qa_per_video < 1 || p.qa_per_video > p.events_min) {
        throw ConfigError(fmt::format("qa_per_video {} must lie in [1, events_min={}]",
                                      p.qa_per_video, p.events_min));
    }
    if (p.choices < 2 || p.choices > static_cast<int>(kColors.size())) {
        throw ConfigError(fmt::format("choices {} outside [2, {}]", p.choices, kColors.size()));
    }
    if (!(p.distractor_rate >= 0.0 && p.distractor_rate <= 1.0)) {
        throw ConfigError(fmt::format("distractor_rate {} outside [0, 1]", p.distractor_rate));
    }
    if (p.hint_levels < 1) throw ConfigError("hint_levels must be >= 1");
}

Corpus generate_corpus(std::uint64_t seed, int n_videos, const CorpusParams& p) {
    if (n_videos < 1) throw ConfigError(fmt::format("n_videos must be >= 1, got {}", n_videos));
    validate_params(p);

    std::mt19937_64 rng(seed);
    const auto len_lo = static_cast<int>(std::ceil(p.event_length_min_s));
    const auto len_hi = static_cast<int>(std::floor(p.event_length_max_s));

    Corpus corpus;
    for (int vi = 0; vi < n_videos; ++vi) {
        GroundedVideo video;
        video.id = fmt::format("s{}-v{:04}", seed, vi);
        video.duration_s =
            p.duration_min_s == p.duration_max_s
                ? p.duration_min_s
                : std::round(std::uniform_real_distribution<double>(p.duration_min_s,
                                                                    p.duration_max_s)(rng));

        const int n_events = std::uniform_int_distribution<int>(p.events_min, p.events_max)(rng);
        std::vector<Interval> placed;
        for (int e = 0; e < n_events; ++e) {
            const int len = std::uniform_int_distribution<int>(len_lo, len_hi)(rng);
            const auto last_start = static_cast<long>(std::floor(video.duration_s)) - len;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                const double start = static_cast<double>(
                    std::uniform_int_distribution<long>(0, last_start)(rng));
                const Interval cand{start, start + len};
                // Keep at least one second between events.
                const bool clash = std::any_of(placed.begin(), placed.end(), [&](const Interval& o) {
                    return cand.start < o.end + 1.0 && o.start < cand.end + 1.0;
                });
                if (!clash) {
                    placed.push_back(cand);
                    break;
                }
            }
        }
        if (static_cast<int>(placed.size()) < p.qa_per_video) {
            throw ConfigError(fmt::format("could not place {} events in a {}s video",
                                          p.qa_per_video, video.duration_s));
        }
        std::sort(placed.begin(), placed.end(),
                  [](const Interval& a, const Interval& b) { return a.start < b.start; });

        std::vector<std::size_t> order(placed.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::size_t> clue_events(order.begin(), order.begin() + p.qa_per_video);
        std::sort(clue_events.begin(), clue_events.end());

        std::vector<Triple> triples(placed.size());
        std::vector<Triple> clue_triples;
        for (std::size_t ce : clue_events) {
            Triple t = random_triple(rng);
            while (std::find(clue_triples.begin(), clue_triples.end(), t) != clue_triples.end()) {
                t = random_triple(rng);
            }
            triples[ce] = t;
            clue_triples.push_back(t);
        }
        for (std::size_t ei = 0; ei < placed.size(); ++ei) {
            if (std::binary_search(clue_events.begin(), clue_events.end(), ei)) continue;
            Triple t = random_triple(rng);
            if (std::bernoulli_distribution(p.distractor_rate)(rng)) {
                // Share two of three keywords with a clue event; the third differs.
                const Triple& src = clue_triples[std::uniform_int_distribution<std::size_t>(
                    0, clue_triples.size() - 1)(rng)];
                const int keep_out = std::uniform_int_distribution<int>(0, 2)(rng);
                t = src;
                auto bump = [&](std::size_t& slot, std::size_t n) {
                    slot = (slot + 1 + std::uniform_int_distribution<std::size_t>(0, n - 2)(rng)) % n;
                };
                if (keep_out == 0) bump(t.subject, kSubjects.size());
                if (keep_out == 1) bump(t.object, kObjects.size());
                if (keep_out == 2) bump(t.place, kPlaces.size());
            }
            while (std::find(clue_triples.begin(), clue_triples.end(), t) != clue_triples.end()) {
                t = random_triple(rng);
            }
            triples[ei] = t;
        }

        std::vector<std::size_t> verbs(placed.size());
        for (std::size_t ei = 0; ei < placed.size(); ++ei) {
            verbs[ei] = pick(rng, kVerbs);
            video.events.push_back(
                {placed[ei], describe(triples[ei], verbs[ei]), keywords_of(triples[ei])});
        }

        for (std::size_t qi = 0; qi < clue_events.size(); ++qi) {
            const std::size_t ce = clue_events[qi];
            const Triple& t = triples[ce];
            GroundedQA qa;
            qa.id = fmt::format("{}-q{}", video.id, qi);
            qa.question = fmt::format("What color is the {} that the {} {} near the {}?",
                                      kObjects[t.object], kSubjects[t.subject], kVerbs[verbs[ce]],
                                      kPlaces[t.place]);
            std::vector<std::size_t> palette(kColors.size());
            for (std::size_t c = 0; c < palette.size(); ++c) palette[c] = c;
            std::shuffle(palette.begin(), palette.end(), rng);
            for (int c = 0; c < p.choices; ++c) qa.choices.emplace_back(kColors[palette[c]]);
            qa.answer_index = std::uniform_int_distribution<int>(0, p.choices - 1)(rng);
            qa.clue = IntervalSet{placed[ce]};
            qa.hint_texts.push_back(fmt::format("The relevant moment involves the {} and the {}.",
                                                kSubjects[t.subject], kObjects[t.object]));
            for (int h = 1; h < p.hint_levels; ++h) {
                qa.hint_texts.push_back(video.events[ce].description);
            }
            video.qa.push_back(std::move(qa));
        }
        corpus.videos.push_back(std::move(video));
    }
    return corpus;
}

void validate_video(const GroundedVideo& v) {
    if (v.id.empty()) throw ValidationError("id", "must be non-empty");
    if (!std::isfinite(v.duration_s) || v.duration_s < 32.0) {
        throw ValidationError("duration_s", fmt::format("{} must be >= 32", v.duration_s));
    }
    for (std::size_t i = 0; i < v.events.size(); ++i) {
        const auto& e = v.events[i];
        check_interval(fmt::format("events[{}].interval", i), e.interval, v.duration_s);
        if (e.keywords.empty()) {
            throw ValidationError(fmt::format("events[{}].keywords", i), "must be non-empty");
        }
    }
    for (std::size_t i = 0; i < v.qa.size(); ++i) {
        const auto& q = v.qa[i];
        const auto field = [&](const char* name) { return fmt::format("qa[{}].{}", i, name); };
        if (q.choices.size() < 2) throw ValidationError(field("choices"), "need at least 2");
        if (q.answer_index < 0 || q.answer_index >= static_cast<int>(q.choices.size())) {
            throw ValidationError(field("answer_index"),
                                  fmt::format("{} outside [0, {})", q.answer_index,
                                              q.choices.size()));
        }
        if (q.clue.empty()) throw ValidationError(field("clue"), "must be non-empty");
        for (std::size_t c = 0; c < q.clue.size(); ++c) {
            check_interval(fmt::format("qa[{}].clue[{}]", i, c), q.clue.intervals()[c],
                           v.duration_s);
        }
        if (q.hint_texts.empty()) throw ValidationError(field("hint_texts"), "must be non-empty");
    }
}

std::string dump_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& v : corpus.videos) {
        out += video_json(v).dump();
        out += '\n';
    }
    return out;
}

Corpus parse_corpus(const std::string& text) {
    Corpus corpus;
    std::istringstream in(text);
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        GroundedVideo v;
        try {
            v = video_from(ordered_json::parse(line));
            validate_video(v);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(record, e.what());
        } catch (const std::invalid_argument& e) {
            throw ParseError(record, e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("record {}: {}", record, e.field()), e.reason());
        }
        corpus.videos.push_back(std::move(v));
        ++record;
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << dump_corpus(corpus);
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str());
}

}  // namespace videonav
