// generator for the bundled synthetic corpus and agreement suite.
//
// the language is a small pseudo-english: sentences follow
//   the (ADJ)? NOUN (PREP the (ADJ)? NOUN)* VERB (ADV)? (the (ADJ)? NOUN)? .
// nouns pluralize with -s, verbs take -s in the singular, and the verb
// always agrees with the sentence-initial subject noun. prepositional phrases
// between subject and verb carry nouns of the opposite number with
// probability attractor_bias, so local word statistics routinely disagree
// with the true subject. part-of-speech classes use disjoint initial
// letters, so no surface form is ambiguous.
//
// the agreement suite holds minimal pairs: identical sentences except the
// verb, with every intervening noun of opposite number, and exact counts
// per attractor bucket. everything is deterministic in the seed.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "antilm/rng.hpp"
#include "antilm/util.hpp"

namespace {

using antilm::RngStream;

struct Lexicon {
  std::vector<std::string> noun_sg, noun_pl, verb_sg, verb_pl, adj, adv;
  std::vector<double> noun_cum, verb_cum, adj_cum, adv_cum;
  std::vector<std::string> preps = {"of", "near", "behind", "beside"};
};

std::vector<std::string> make_stems(const std::string& onsets, std::size_t count) {
  const std::string vowels = "aeiou";
  const std::string codas = "dkmnprt";
  std::vector<std::string> stems;
  for (std::size_t i = 0; stems.size() < count; ++i) {
    std::string s;
    s += onsets[i % onsets.size()];
    s += vowels[(i / onsets.size()) % vowels.size()];
    s += codas[(i / (onsets.size() * vowels.size())) % codas.size()];
    s += vowels[(i / (onsets.size() * vowels.size() * codas.size()) + i) % vowels.size()];
    stems.push_back(s);
  }
  return stems;
}

// strongly skewed frequencies keep the trigram tables dense at the
// high-mass n-grams, so the anti-model mixes contexts instead of
// replaying memorized lines
std::vector<double> zipf_cum(std::size_t n) {
  std::vector<double> cum(n);
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r) + 2.0, 1.1);
    cum[r] = acc;
  }
  return cum;
}

std::size_t pick(const std::vector<double>& cum, RngStream& rng) {
  double u = rng.next_unit() * cum.back();
  auto it = std::lower_bound(cum.begin(), cum.end(), u);
  return static_cast<std::size_t>(it - cum.begin());
}

Lexicon build_lexicon() {
  Lexicon lex;
  auto noun_stems = make_stems("bdfgk", 45);
  auto verb_stems = make_stems("lmnpr", 35);
  auto adj_stems = make_stems("stvz", 20);
  auto adv_stems = make_stems("wy", 10);
  for (const auto& s : noun_stems) {
    lex.noun_sg.push_back(s);
    lex.noun_pl.push_back(s + "s");
  }
  for (const auto& s : verb_stems) {
    lex.verb_sg.push_back(s + "s");
    lex.verb_pl.push_back(s);
  }
  lex.adj = adj_stems;
  for (const auto& s : adv_stems) lex.adv.push_back(s + "ly");
  lex.noun_cum = zipf_cum(lex.noun_sg.size());
  lex.verb_cum = zipf_cum(lex.verb_sg.size());
  lex.adj_cum = zipf_cum(lex.adj.size());
  lex.adv_cum = zipf_cum(lex.adv.size());

  std::set<std::string> all;
  auto add = [&](const std::vector<std::string>& v) {
    for (const auto& w : v)
      if (!all.insert(w).second) throw std::runtime_error("lexicon collision: " + w);
  };
  add(lex.noun_sg);
  add(lex.noun_pl);
  add(lex.verb_sg);
  add(lex.verb_pl);
  add(lex.adj);
  add(lex.adv);
  add(lex.preps);
  add({"the", "."});
  return lex;
}

// a high attractor bias keeps local word statistics genuinely misleading:
// the noun nearest the verb disagrees with the subject often enough that an
// n-gram model picks up the wrong number cue, which is exactly the error
// pattern the negative corpus is meant to carry
struct GenParams {
  double adj_prob_subject = 0.25;
  double adj_prob_pp = 0.18;
  double attractor_bias = 0.65;  // chance a pp noun has the opposite number
  double adverb_prob = 0.30;
  double object_prob = 0.50;
  std::vector<double> pp_count_cum;  // over 0..5 prepositional phrases

  GenParams() {
    const double probs[] = {0.25, 0.30, 0.22, 0.13, 0.07, 0.03};
    double acc = 0.0;
    for (double p : probs) pp_count_cum.push_back(acc += p);
  }
};

void append_np(std::vector<std::string>& toks, const Lexicon& lex, RngStream& rng, bool plural,
               double adj_prob) {
  toks.push_back("the");
  if (rng.next_unit() < adj_prob) toks.push_back(lex.adj[pick(lex.adj_cum, rng)]);
  std::size_t lemma = pick(lex.noun_cum, rng);
  toks.push_back(plural ? lex.noun_pl[lemma] : lex.noun_sg[lemma]);
}

std::string gen_sentence(const Lexicon& lex, const GenParams& par, RngStream& rng) {
  std::vector<std::string> toks;
  bool subject_plural = rng.next_unit() < 0.5;
  append_np(toks, lex, rng, subject_plural, par.adj_prob_subject);
  std::size_t n_pp = pick(par.pp_count_cum, rng);
  for (std::size_t i = 0; i < n_pp; ++i) {
    toks.push_back(lex.preps[rng.next_below(lex.preps.size())]);
    bool opposite = rng.next_unit() < par.attractor_bias;
    append_np(toks, lex, rng, opposite ? !subject_plural : subject_plural, par.adj_prob_pp);
  }
  std::size_t verb = pick(lex.verb_cum, rng);
  toks.push_back(subject_plural ? lex.verb_pl[verb] : lex.verb_sg[verb]);
  if (rng.next_unit() < par.adverb_prob) toks.push_back(lex.adv[pick(lex.adv_cum, rng)]);
  if (rng.next_unit() < par.object_prob)
    append_np(toks, lex, rng, rng.next_unit() < 0.5, par.adj_prob_subject);
  toks.push_back(".");
  std::string line;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) line += ' ';
    line += toks[i];
  }
  return line;
}

// minimal pair with exactly n_attr opposite-number nouns between subject and
// verb
std::string gen_agreement_row(const Lexicon& lex, const GenParams& par, RngStream& rng,
                              int n_attr) {
  std::vector<std::string> toks;
  bool subject_plural = rng.next_unit() < 0.5;
  append_np(toks, lex, rng, subject_plural, par.adj_prob_subject);
  for (int i = 0; i < n_attr; ++i) {
    toks.push_back(lex.preps[rng.next_below(lex.preps.size())]);
    append_np(toks, lex, rng, !subject_plural, par.adj_prob_pp);
  }
  std::size_t verb = pick(lex.verb_cum, rng);
  std::size_t verb_pos = toks.size();
  std::vector<std::string> gram = toks, ungram = toks;
  gram.push_back(subject_plural ? lex.verb_pl[verb] : lex.verb_sg[verb]);
  ungram.push_back(subject_plural ? lex.verb_sg[verb] : lex.verb_pl[verb]);
  gram.push_back(".");
  ungram.push_back(".");
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ' ';
      s += v[i];
    }
    return s;
  };
  std::ostringstream row;
  row << join(gram) << '\t' << join(ungram) << '\t' << verb_pos << '\t' << n_attr;
  return row.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate the bundled synthetic corpus and agreement suite"};
  std::string out_dir;
  std::uint64_t seed = 7;
  int train_n = 2000, dev_n = 400, per_bucket = 200, overflow_rows = 25;
  app.add_option("--out-dir", out_dir, "directory for train.txt, dev.txt, agreement.tsv")->required();
  app.add_option("--seed", seed, "rng seed");
  app.add_option("--train-sentences", train_n, "training sentence count");
  app.add_option("--dev-sentences", dev_n, "dev sentence count");
  app.add_option("--agreement-per-bucket", per_bucket, "instances per attractor count 0..5");
  app.add_option("--overflow-rows", overflow_rows, "instances each at 6 and 7 attractors");
  CLI11_PARSE(app, argc, argv);

  try {
    Lexicon lex = build_lexicon();
    GenParams par;

    RngStream train_rng = RngStream::derive(seed, 1);
    RngStream dev_rng = RngStream::derive(seed, 2);
    RngStream agree_rng = RngStream::derive(seed, 3);

    std::vector<std::string> train_lines, dev_lines, agree_lines;
    for (int i = 0; i < train_n; ++i) train_lines.push_back(gen_sentence(lex, par, train_rng));
    for (int i = 0; i < dev_n; ++i) dev_lines.push_back(gen_sentence(lex, par, dev_rng));
    for (int k = 0; k <= 5; ++k)
      for (int i = 0; i < per_bucket; ++i)
        agree_lines.push_back(gen_agreement_row(lex, par, agree_rng, k));
    for (int k = 6; k <= 7; ++k)
      for (int i = 0; i < overflow_rows; ++i)
        agree_lines.push_back(gen_agreement_row(lex, par, agree_rng, k));

    // every surface form must appear in the training text, otherwise the
    // agreement suite would hit out-of-vocabulary verbs
    std::map<std::string, int> counts;
    for (const auto& line : train_lines)
      for (const auto& tok : antilm::split_ws(line)) ++counts[tok];
    int min_count = 0;
    std::string min_form = "-";
    auto check = [&](const std::vector<std::string>& forms) {
      for (const auto& f : forms) {
        auto it = counts.find(f);
        int c = it == counts.end() ? 0 : it->second;
        if (min_form == "-" || c < min_count) {
          min_count = c;
          min_form = f;
        }
        if (c == 0) throw std::runtime_error("form absent from training text: " + f);
      }
    };
    check(lex.noun_sg);
    check(lex.noun_pl);
    check(lex.verb_sg);
    check(lex.verb_pl);
    check(lex.adj);
    check(lex.adv);
    check(lex.preps);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto join_lines = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& line : v) {
        s += line;
        s += '\n';
      }
      return s;
    };
    antilm::write_text(out_dir + "/train.txt", join_lines(train_lines));
    antilm::write_text(out_dir + "/dev.txt", join_lines(dev_lines));
    std::string header =
        "# columns: grammatical<TAB>ungrammatical<TAB>verb_position<TAB>n_attractors\n";
    antilm::write_text(out_dir + "/agreement.tsv", header + join_lines(agree_lines));

    std::size_t train_tokens = 0;
    for (const auto& [form, c] : counts) train_tokens += static_cast<std::size_t>(c);
    std::cout << "wrote " << train_lines.size() << " train / " << dev_lines.size() << " dev / "
              << agree_lines.size() << " agreement rows to " << out_dir << "\n"
              << "distinct forms " << counts.size() << " (vocab incl. specials "
              << counts.size() + 3 << "), train tokens " << train_tokens << ", rarest form '"
              << min_form << "' x" << min_count << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
