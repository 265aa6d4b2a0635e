// Copyright 2026 The densecap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "densecap/errors.hpp"
#include "densecap/synth/synthdata.hpp"

namespace densecap::synth {

namespace {

constexpr double kBackground = 128.0;

void validate(const CorpusConfig& c) {
  if (c.motifs == 0 || c.motifs > motif_library().size()) {
    throw ContractError("synth: motif count " + std::to_string(c.motifs) +
                        " outside 1.." + std::to_string(motif_library().size()));
  }
  if (c.frames == 0 || c.height == 0 || c.width == 0 || c.frame_rate <= 0.0) {
    throw ContractError("synth: video geometry must be positive");
  }
  if (c.frames_per_step == 0 || c.frames % c.frames_per_step != 0) {
    throw ContractError("synth: frames must be a multiple of frames_per_step");
  }
  const std::size_t steps = c.frames / c.frames_per_step;
  if (c.min_events < 1 || c.min_events > c.max_events) {
    throw ContractError("synth: need 1 <= min_events <= max_events");
  }
  if (c.min_event_steps < 1 || c.min_event_steps > c.max_event_steps ||
      c.min_event_steps > steps) {
    throw ContractError("synth: event length range does not fit the video");
  }
  if (c.overlap_probability < 1.0 && c.max_events * c.min_event_steps > steps) {
    throw ContractError("synth: " + std::to_string(c.max_events) + " disjoint events of " +
                        std::to_string(c.min_event_steps) + " steps do not fit " +
                        std::to_string(steps) + " steps");
  }
  if (c.overlap_probability < 0.0 || c.overlap_probability > 1.0 ||
      c.repeat_probability < 0.0 || c.repeat_probability > 1.0) {
    throw ContractError("synth: probabilities must lie in [0, 1]");
  }
  if (c.noise_sigma < 0.0) throw ContractError("synth: noise sigma must be >= 0");
}

std::mt19937_64 video_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  return std::mt19937_64(seq);
}

double wrap(double d, double n) {
  d = std::fmod(d, n);
  if (d < -n / 2) d += n;
  if (d >= n / 2) d -= n;
  return d;
}

// Coverage in [0, 1] of pixel (r, c) by a pattern centered at (cy, cx).
double mask(Pattern p, double r, double c, double cy, double cx, double h, double w) {
  const double dy = wrap(r - cy, h);
  const double dx = wrap(c - cx, w);
  switch (p) {
    case Pattern::blob: {
      const double d2 = dy * dy + dx * dx;
      return d2 < 25.0 ? std::exp(-d2 / (2 * 1.8 * 1.8)) : 0.0;
    }
    case Pattern::bar:
      return std::abs(dy) <= 1.5 && std::abs(dx) <= 4.5 ? 1.0 : 0.0;
    case Pattern::checker: {
      if (dy < -4 || dy >= 4 || dx < -4 || dx >= 4) return 0.0;
      const int a = static_cast<int>(std::floor((dy + 4) / 2));
      const int b = static_cast<int>(std::floor((dx + 4) / 2));
      return (a + b) % 2 == 0 ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

template <typename Fn>
void for_each_covered(const EventTrack& track, const CorpusConfig& config, Fn&& fn) {
  const MotifSpec& m = motif_library()[static_cast<std::size_t>(track.motif)];
  const double h = static_cast<double>(config.height), w = static_cast<double>(config.width);
  for (std::size_t f = track.start_frame; f < track.end_frame; ++f) {
    const double step = static_cast<double>(f - track.start_frame);
    const double cy = std::round(track.origin[0] + m.dy * step);
    const double cx = std::round(track.origin[1] + m.dx * step);
    for (std::size_t r = 0; r < config.height; ++r) {
      for (std::size_t c = 0; c < config.width; ++c) {
        const double a = mask(m.pattern, static_cast<double>(r), static_cast<double>(c), cy, cx, h, w);
        if (a > 0.0) fn(f, r, c, a, m);
      }
    }
  }
}

struct Interval {
  std::size_t start, end;  // timesteps, end exclusive
};

std::vector<Interval> sample_intervals(const CorpusConfig& c, std::mt19937_64& rng,
                                       std::size_t index) {
  const std::size_t steps = c.frames / c.frames_per_step;
  for (std::size_t attempt = 0; attempt < c.max_retries; ++attempt) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(c.min_events, c.max_events)(rng);
    // Leave room for the other events at their minimum length.
    const std::size_t room = steps >= (n - 1) * c.min_event_steps ? steps - (n - 1) * c.min_event_steps : 0;
    const std::size_t longest = std::min(c.max_event_steps, std::max(room, c.min_event_steps));
    std::vector<Interval> iv;
    std::vector<bool> may_overlap;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = std::uniform_int_distribution<std::size_t>(c.min_event_steps, longest)(rng);
      const std::size_t s = std::uniform_int_distribution<std::size_t>(0, steps - len)(rng);
      iv.push_back({s, s + len});
      may_overlap.push_back(std::bernoulli_distribution(c.overlap_probability)(rng));
    }
    std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) {
      return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = i + 1; j < n && ok; ++j) {
        const Segment a = Segment::from_bounds(static_cast<double>(iv[i].start), static_cast<double>(iv[i].end));
        const Segment b = Segment::from_bounds(static_cast<double>(iv[j].start), static_cast<double>(iv[j].end));
        const double t = tiou(a, b);
        if (t == 0.0) continue;
        // Only neighbours may overlap, partially, and never nest.
        const bool nested = iv[j].end <= iv[i].end;
        if (j != i + 1 || !may_overlap[j] || nested || t > 0.5) ok = false;
      }
    }
    if (ok) {
      if (attempt >= 100) {
        spdlog::warn("synth: video {} needed {} interval draws", index, attempt + 1);
      }
      return iv;
    }
  }
  throw DataError("synth: could not place events for video " + std::to_string(index) + " within " +
                  std::to_string(c.max_retries) + " attempts");
}

}  // namespace

void to_json(nlohmann::json& j, const CorpusConfig& c) {
  j = nlohmann::json{{"videos", c.videos},
                     {"frames", c.frames},
                     {"height", c.height},
                     {"width", c.width},
                     {"frame_rate", c.frame_rate},
                     {"frames_per_step", c.frames_per_step},
                     {"motifs", c.motifs},
                     {"min_events", c.min_events},
                     {"max_events", c.max_events},
                     {"min_event_steps", c.min_event_steps},
                     {"max_event_steps", c.max_event_steps},
                     {"overlap_probability", c.overlap_probability},
                     {"repeat_probability", c.repeat_probability},
                     {"noise_sigma", c.noise_sigma},
                     {"seed", c.seed},
                     {"max_retries", c.max_retries}};
}

void from_json(const nlohmann::json& j, CorpusConfig& c) {
  CorpusConfig d;
  c.videos = j.value("videos", d.videos);
  c.frames = j.value("frames", d.frames);
  c.height = j.value("height", d.height);
  c.width = j.value("width", d.width);
  c.frame_rate = j.value("frame_rate", d.frame_rate);
  c.frames_per_step = j.value("frames_per_step", d.frames_per_step);
  c.motifs = j.value("motifs", d.motifs);
  c.min_events = j.value("min_events", d.min_events);
  c.max_events = j.value("max_events", d.max_events);
  c.min_event_steps = j.value("min_event_steps", d.min_event_steps);
  c.max_event_steps = j.value("max_event_steps", d.max_event_steps);
  c.overlap_probability = j.value("overlap_probability", d.overlap_probability);
  c.repeat_probability = j.value("repeat_probability", d.repeat_probability);
  c.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  c.seed = j.value("seed", d.seed);
  c.max_retries = j.value("max_retries", d.max_retries);
}

std::vector<double> render_track(const EventTrack& track, const CorpusConfig& config) {
  const std::size_t plane = config.frames * config.height * config.width;
  std::vector<double> out(3 * plane, 0.0);
  for_each_covered(track, config, [&](std::size_t f, std::size_t r, std::size_t c, double a,
                                      const MotifSpec& m) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      out[ch * plane + (f * config.height + r) * config.width + c] = a * (m.rgb[ch] - kBackground);
    }
  });
  return out;
}

VideoRecord generate_video(const CorpusConfig& config, std::size_t index) {
  validate(config);
  auto rng = video_rng(config.seed, index);
  std::vector<Interval> iv = sample_intervals(config, rng, index);
  std::stable_sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) {
    return a.end != b.end ? a.end < b.end : a.start < b.start;
  });

  VideoRecord v;
  v.id = "synth_" + std::string(4 - std::min<std::size_t>(4, std::to_string(index).size()), '0') +
         std::to_string(index);
  v.frames = config.frames;
  v.height = config.height;
  v.width = config.width;
  v.frame_rate = config.frame_rate;

  std::uniform_int_distribution<int> any_motif(0, static_cast<int>(config.motifs) - 1);
  std::bernoulli_distribution repeat(config.repeat_probability);
  for (std::size_t t = 0; t < iv.size(); ++t) {
    int m = any_motif(rng);
    if (t > 0) {
      if (repeat(rng) || config.motifs == 1) {
        m = v.motifs.back();
      } else {
        // Uniform over the other motifs.
        m = std::uniform_int_distribution<int>(0, static_cast<int>(config.motifs) - 2)(rng);
        if (m >= v.motifs.back()) ++m;
      }
    }
    v.motifs.push_back(m);
    EventTrack track;
    track.motif = m;
    track.start_frame = iv[t].start * config.frames_per_step;
    track.end_frame = iv[t].end * config.frames_per_step;
    track.origin = {std::uniform_real_distribution<double>(0, static_cast<double>(config.height))(rng),
                    std::uniform_real_distribution<double>(0, static_cast<double>(config.width))(rng)};
    v.events.push_back(track);
    v.segments.push_back(Segment::from_bounds(
        static_cast<double>(track.start_frame) / config.frame_rate,
        static_cast<double>(track.end_frame) / config.frame_rate));
  }
  for (std::size_t t = 0; t < v.motifs.size(); ++t) v.captions.push_back(oracle_caption(v.motifs, t));

  const std::size_t plane = config.frames * config.height * config.width;
  std::vector<double> canvas(3 * plane, kBackground);
  for (const auto& track : v.events) {
    for_each_covered(track, config, [&](std::size_t f, std::size_t r, std::size_t c, double a,
                                        const MotifSpec& m) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double& px = canvas[ch * plane + (f * config.height + r) * config.width + c];
        px = (1 - a) * px + a * m.rgb[ch];
      }
    });
  }
  std::normal_distribution<double> noise(0.0, config.noise_sigma);
  v.pixels.resize(canvas.size());
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    const double n = config.noise_sigma > 0.0 ? noise(rng) : 0.0;
    v.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(canvas[i] + n), 0.0, 255.0));
  }
  return v;
}

std::vector<VideoRecord> generate_corpus(const CorpusConfig& config) {
  validate(config);
  std::vector<VideoRecord> out(config.videos);
  std::vector<std::exception_ptr> errors(config.videos);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < config.videos; i = next++) {
      try {
        out[i] = generate_video(config, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(config.videos, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double motif_separation(const CorpusConfig& config, std::size_t frames) {
  CorpusConfig c = config;
  c.frames = frames;
  std::vector<std::vector<double>> renders;
  for (std::size_t m = 0; m < config.motifs; ++m) {
    EventTrack t{static_cast<int>(m), 0, frames,
                 {static_cast<double>(config.height) / 2, static_cast<double>(config.width) / 2}};
    renders.push_back(render_track(t, c));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < renders.size(); ++i) {
    for (std::size_t j = i + 1; j < renders.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < renders[i].size(); ++k) {
        const double d = renders[i][k] - renders[j][k];
        s += d * d;
      }
      best = std::min(best, s / static_cast<double>(renders[i].size()));
    }
  }
  return best;
}

double AuditReport::history_fraction() const {
  return captions == 0 ? 0.0 : static_cast<double>(history_dependent) / static_cast<double>(captions);
}

AuditReport audit(const CorpusConfig& config, const std::vector<VideoRecord>& videos,
                  double min_correlation, double min_separation, double min_history_fraction) {
  AuditReport r;
  const std::size_t plane = config.frames * config.height * config.width;
  for (const auto& v : videos) {
    if (v.segments.size() < 2) r.problems.push_back(v.id + ": fewer than two events");
    for (std::size_t t = 0; t < v.captions.size(); ++t) {
      ++r.captions;
      if (history_dependent(v.motifs, t)) ++r.history_dependent;
      if (!parse_caption(v.captions[t])) {
        ++r.unparsable;
        r.problems.push_back(v.id + ": caption " + std::to_string(t) + " does not parse");
      } else if (v.captions[t] != oracle_caption(v.motifs, t)) {
        ++r.wrong_wording;
        r.problems.push_back(v.id + ": caption " + std::to_string(t) + " disagrees with its history");
      }
      const Segment& s = v.segments[t];
      if (s.start() < 0.0 || s.end() > v.duration()) {
        r.problems.push_back(v.id + ": segment " + std::to_string(t) + " outside the video");
      }
    }
    for (std::size_t t = 0; t < v.events.size(); ++t) {
      // Pearson correlation between the lone motif and the video, over the
      // pixels of the event's frames.
      const auto tmpl = render_track(v.events[t], config);
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, n = 0;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        for (std::size_t f = v.events[t].start_frame; f < v.events[t].end_frame; ++f) {
          for (std::size_t p = 0; p < config.height * config.width; ++p) {
            const std::size_t k = ch * plane + f * config.height * config.width + p;
            const double x = tmpl[k], y = v.pixels[k] - kBackground;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
            n += 1;
          }
        }
      }
      const double cov = sxy - sx * sy / n;
      const double den = std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
      const double corr = den > 0.0 ? cov / den : 0.0;
      r.min_motif_correlation = std::min(r.min_motif_correlation, corr);
      if (corr < min_correlation) {
        ++r.missing_motif;
        r.problems.push_back(v.id + ": event " + std::to_string(t) + " motif correlation " +
                             std::to_string(corr));
      }
    }
  }
  r.min_motif_separation = motif_separation(config);
  if (config.motifs > 1 && r.min_motif_separation < min_separation) {
    r.problems.push_back("motifs are not separable enough: " + std::to_string(r.min_motif_separation));
  }
  if (r.history_fraction() < min_history_fraction) {
    r.problems.push_back("history-dependent captions " + std::to_string(r.history_fraction()) +
                         " below " + std::to_string(min_history_fraction));
  }
  return r;
}

}  // namespace densecap::synth
