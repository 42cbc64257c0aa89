#include "varikit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "varikit/util/rng.hpp"
#include "varikit/util/toml.hpp"

namespace varikit {

using nlohmann::json;

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::sequence_classification: return "sequence_classification";
        case TaskKind::token_labeling: return "token_labeling";
        case TaskKind::pair_classification: return "pair_classification";
    }
    return "sequence_classification";
}
std::string to_string(Metric m) { return m == Metric::accuracy ? "accuracy" : "micro_f1"; }
std::string to_string(DiversityBlock b) {
    return b == DiversityBlock::standard ? "standard" : "diverse";
}
TaskKind task_kind_from_string(const std::string& s) {
    if (s == "sequence_classification") return TaskKind::sequence_classification;
    if (s == "token_labeling") return TaskKind::token_labeling;
    if (s == "pair_classification") return TaskKind::pair_classification;
    throw std::invalid_argument("unknown task kind: " + s);
}
Metric metric_from_string(const std::string& s) {
    if (s == "accuracy") return Metric::accuracy;
    if (s == "micro_f1") return Metric::micro_f1;
    throw std::invalid_argument("unknown metric: " + s);
}
DiversityBlock diversity_block_from_string(const std::string& s) {
    if (s == "standard") return DiversityBlock::standard;
    if (s == "diverse") return DiversityBlock::diverse;
    throw std::invalid_argument("unknown diversity block: " + s);
}

TaskSpec TaskSpec::from_toml_file(const std::string& path) {
    TomlTable toml = TomlTable::parse_file(path);
    const std::string section = toml.has("task", "name") ? "task" : "";
    TaskSpec spec;
    spec.name = toml.get_string(section, "name");
    spec.kind = task_kind_from_string(toml.get_string(section, "kind"));
    spec.metric = metric_from_string(toml.get_string(section, "metric"));
    spec.diversity_block =
        diversity_block_from_string(toml.get_string(section, "diversity_block"));
    spec.train_path = toml.get_string(section, "train");
    spec.dev_path = toml.get_string(section, "dev", "");
    spec.test_path = toml.get_string(section, "test");
    spec.null_label = toml.get_string(section, "null_label", "O");
    return spec;
}

std::vector<TaskExample> load_task_examples(const std::string& path, TaskKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open task data: " + path);
    std::vector<TaskExample> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        TaskExample ex;
        if (kind == TaskKind::token_labeling) {
            if (!j.contains("tokens") || !j.contains("labels")) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": token task needs \"tokens\" and \"labels\"");
            }
            ex.tokens = j["tokens"].get<std::vector<std::string>>();
            ex.labels = j["labels"].get<std::vector<std::string>>();
            if (ex.tokens.size() != ex.labels.size()) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": tokens/labels length mismatch");
            }
        } else {
            if (!j.contains("text") || !j.contains("label")) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": task needs \"text\" and \"label\"");
            }
            ex.text = j["text"].get<std::string>();
            ex.label = j["label"].get<std::string>();
            if (kind == TaskKind::pair_classification) {
                if (!j.contains("text_pair")) {
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": pair task needs \"text_pair\"");
                }
                ex.text_pair = j["text_pair"].get<std::string>();
            }
        }
        if (j.contains("dialect")) ex.dialect = j["dialect"].get<std::string>();
        out.push_back(std::move(ex));
    }
    return out;
}

void save_task_examples(const std::vector<TaskExample>& examples, TaskKind kind,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write task data: " + path);
    for (const TaskExample& ex : examples) {
        json j;
        if (kind == TaskKind::token_labeling) {
            j["tokens"] = ex.tokens;
            j["labels"] = ex.labels;
        } else {
            j["text"] = ex.text;
            j["label"] = ex.label;
            if (ex.text_pair) j["text_pair"] = *ex.text_pair;
        }
        if (ex.dialect) j["dialect"] = *ex.dialect;
        out << j.dump() << '\n';
    }
}

namespace {

struct EncodedExample {
    std::vector<TokenId> ids;
    std::vector<int64_t> position_labels;  // label id per position, -1 ignored
    int64_t sequence_label = -1;
};

// <s> text </s> for single texts, <s> A </s> </s> B </s> for pairs,
// labels on the first subtoken of each word for token tasks.
EncodedExample encode_example(const TaskExample& ex, TaskKind kind,
                              const SubwordTokenizer& tok,
                              const std::map<std::string, int64_t>& label_ids, int max_len,
                              bool require_known_labels) {
    const SpecialIds& sp = tok.specials();
    EncodedExample enc;
    auto label_id = [&](const std::string& label) -> int64_t {
        auto it = label_ids.find(label);
        if (it == label_ids.end()) {
            if (require_known_labels) {
                throw std::runtime_error("evaluation: unseen label \"" + label + "\"");
            }
            return -1;
        }
        return it->second;
    };

    enc.ids.push_back(sp.bos);
    if (kind == TaskKind::token_labeling) {
        enc.position_labels.push_back(-1);
        for (size_t w = 0; w < ex.tokens.size(); ++w) {
            std::vector<TokenId> sub = tok.encode_word(ex.tokens[w]);
            for (size_t s = 0; s < sub.size(); ++s) {
                if (enc.ids.size() >= static_cast<size_t>(max_len) - 1) break;
                enc.ids.push_back(sub[s]);
                enc.position_labels.push_back(s == 0 ? label_id(ex.labels[w]) : -1);
            }
        }
        enc.ids.push_back(sp.eos);
        enc.position_labels.push_back(-1);
    } else {
        std::vector<TokenId> a = tok.encode(ex.text);
        for (TokenId id : a) {
            if (enc.ids.size() >= static_cast<size_t>(max_len) - 1) break;
            enc.ids.push_back(id);
        }
        if (kind == TaskKind::pair_classification) {
            enc.ids.push_back(sp.eos);
            enc.ids.push_back(sp.eos);
            std::vector<TokenId> b = tok.encode(ex.text_pair.value_or(""));
            for (TokenId id : b) {
                if (enc.ids.size() >= static_cast<size_t>(max_len) - 1) break;
                enc.ids.push_back(id);
            }
        }
        enc.ids.push_back(sp.eos);
        enc.sequence_label = label_id(ex.label);
    }
    return enc;
}

IdMatrix batch_ids(std::span<const EncodedExample> batch, int max_len) {
    Eigen::Index L = 0;
    for (const auto& ex : batch) L = std::max(L, static_cast<Eigen::Index>(ex.ids.size()));
    L = std::min<Eigen::Index>(L, max_len);
    IdMatrix ids = IdMatrix::Zero(static_cast<Eigen::Index>(batch.size()), L);  // 0 = <pad>
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch.size()); ++b) {
        const auto& ex = batch[static_cast<size_t>(b)];
        for (Eigen::Index t = 0; t < L && t < static_cast<Eigen::Index>(ex.ids.size()); ++t) {
            ids(b, t) = static_cast<int32_t>(ex.ids[static_cast<size_t>(t)]);
        }
    }
    return ids;
}

struct HeadGrads {
    Mat<float> dw;
    Mat<float> db;
};

// Returns mean CE loss; fills d_hidden and head gradients.
double head_loss_and_grads(const Mat<float>& hidden, const IdMatrix& ids,
                           std::span<const EncodedExample> batch, TaskKind kind,
                           const Mat<float>& head_w, const Mat<float>& head_b,
                           Mat<float>& d_hidden, HeadGrads& hg) {
    const Eigen::Index L = ids.cols();
    const Eigen::Index C = head_w.cols();
    d_hidden = Mat<float>::Zero(hidden.rows(), hidden.cols());
    hg.dw = Mat<float>::Zero(head_w.rows(), head_w.cols());
    hg.db = Mat<float>::Zero(1, C);

    // Collect (hidden row, label) training points.
    std::vector<std::pair<Eigen::Index, int64_t>> points;
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch.size()); ++b) {
        const auto& ex = batch[static_cast<size_t>(b)];
        if (kind == TaskKind::token_labeling) {
            for (Eigen::Index t = 0; t < L && t < static_cast<Eigen::Index>(ex.position_labels.size());
                 ++t) {
                int64_t lbl = ex.position_labels[static_cast<size_t>(t)];
                if (lbl >= 0) points.emplace_back(b * L + t, lbl);
            }
        } else if (ex.sequence_label >= 0) {
            points.emplace_back(b * L, ex.sequence_label);  // <s> position
        }
    }
    if (points.empty()) return 0.0;

    double loss = 0.0;
    const float inv_n = 1.0f / static_cast<float>(points.size());
    for (auto [row, lbl] : points) {
        Eigen::RowVectorXf logits = hidden.row(row) * head_w + head_b.row(0);
        float mx = logits.maxCoeff();
        Eigen::RowVectorXf p = (logits.array() - mx).exp();
        p /= p.sum();
        loss += -std::log(std::max(p(static_cast<Eigen::Index>(lbl)), 1e-30f));
        p(static_cast<Eigen::Index>(lbl)) -= 1.0f;
        p *= inv_n;
        hg.db.row(0) += p;
        hg.dw += hidden.row(row).transpose() * p;
        d_hidden.row(row) += p * head_w.transpose();
    }
    return loss * inv_n;
}

std::vector<int64_t> head_predictions(const Mat<float>& hidden, const IdMatrix& ids,
                                      std::span<const EncodedExample> batch, TaskKind kind,
                                      const Mat<float>& head_w, const Mat<float>& head_b,
                                      std::vector<std::vector<int64_t>>* token_preds) {
    const Eigen::Index L = ids.cols();
    std::vector<int64_t> seq_preds(batch.size(), -1);
    if (token_preds) token_preds->assign(batch.size(), {});
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch.size()); ++b) {
        const auto& ex = batch[static_cast<size_t>(b)];
        if (kind == TaskKind::token_labeling) {
            auto& preds = (*token_preds)[static_cast<size_t>(b)];
            for (Eigen::Index t = 0;
                 t < L && t < static_cast<Eigen::Index>(ex.position_labels.size()); ++t) {
                Eigen::RowVectorXf logits = hidden.row(b * L + t) * head_w + head_b.row(0);
                Eigen::Index arg = 0;
                logits.maxCoeff(&arg);
                preds.push_back(arg);
            }
        } else {
            Eigen::RowVectorXf logits = hidden.row(b * L) * head_w + head_b.row(0);
            Eigen::Index arg = 0;
            logits.maxCoeff(&arg);
            seq_preds[static_cast<size_t>(b)] = arg;
        }
    }
    return seq_preds;
}

std::map<std::string, int64_t> collect_labels(const std::vector<TaskExample>& train,
                                              TaskKind kind) {
    std::set<std::string> names;
    for (const TaskExample& ex : train) {
        if (kind == TaskKind::token_labeling) {
            names.insert(ex.labels.begin(), ex.labels.end());
        } else {
            names.insert(ex.label);
        }
    }
    if (names.empty()) throw std::invalid_argument("finetune: task has an empty label set");
    std::map<std::string, int64_t> ids;
    int64_t next = 0;
    for (const std::string& n : names) ids[n] = next++;
    return ids;
}

}  // namespace

TaskModel finetune(const EncoderWeights<float>& checkpoint, const TaskSpec& spec,
                   const std::vector<TaskExample>& train, const SubwordTokenizer& tokenizer,
                   uint64_t seed, const FinetuneOptions& options) {
    if (train.empty()) throw std::invalid_argument("finetune: empty training set");
    std::map<std::string, int64_t> label_ids = collect_labels(train, spec.kind);

    TaskModel model;
    model.task_name = spec.name;
    model.kind = spec.kind;
    model.encoder = checkpoint;
    model.label_names.resize(label_ids.size());
    for (const auto& [name, id] : label_ids) model.label_names[static_cast<size_t>(id)] = name;
    model.null_label = spec.null_label;
    // Large models halve the configured rate to tame seed variance.
    model.effective_lr =
        checkpoint.config.size_class == SizeClass::large ? options.lr / 2.0 : options.lr;

    const int d = checkpoint.config.hidden_dim;
    const auto C = static_cast<Eigen::Index>(label_ids.size());
    Rng rng(mix64(hash_combine(seed, fnv1a64(spec.name))));
    model.head_w.resize(d, C);
    for (Eigen::Index i = 0; i < model.head_w.rows(); ++i) {
        for (Eigen::Index j = 0; j < C; ++j) {
            model.head_w(i, j) = static_cast<float>(rng.normal(0.0, 0.02));
        }
    }
    model.head_b = Mat<float>::Zero(1, C);

    const int max_len = std::min(options.max_len, checkpoint.config.max_positions);
    std::vector<EncodedExample> encoded;
    encoded.reserve(train.size());
    for (const TaskExample& ex : train) {
        encoded.push_back(encode_example(ex, spec.kind, tokenizer, label_ids, max_len, true));
    }

    // AdamW over encoder and head parameters, constant learning rate.
    EncoderWeights<float> m_enc = EncoderWeights<float>::zeros(checkpoint.config);
    EncoderWeights<float> v_enc = EncoderWeights<float>::zeros(checkpoint.config);
    Mat<float> m_hw = Mat<float>::Zero(d, C), v_hw = Mat<float>::Zero(d, C);
    Mat<float> m_hb = Mat<float>::Zero(1, C), v_hb = Mat<float>::Zero(1, C);
    const double b1 = 0.9, b2 = 0.98, eps = 1e-6;
    int64_t step = 0;

    std::vector<size_t> order(encoded.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        Rng shuffle_rng(hash_combine(seed, 0xf17e + static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(options.batch_size)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(options.batch_size));
            std::vector<EncodedExample> batch;
            batch.reserve(end - start);
            for (size_t i = start; i < end; ++i) batch.push_back(encoded[order[i]]);

            IdMatrix ids = batch_ids(batch, max_len);
            EncoderCache<float> cache;
            Mat<float> hidden = forward_hidden(model.encoder, ids, &cache);
            Mat<float> d_hidden;
            HeadGrads hg;
            double loss = head_loss_and_grads(hidden, ids, batch, spec.kind, model.head_w,
                                              model.head_b, d_hidden, hg);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("finetune: non-finite loss on task " + spec.name);
            }
            EncoderWeights<float> grads = EncoderWeights<float>::zeros(checkpoint.config);
            backward_hidden(model.encoder, cache, d_hidden, grads);

            ++step;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
            auto adamw = [&](Mat<float>& p, Mat<float>& m, Mat<float>& v, const Mat<float>& g,
                             bool decay) {
                m.array() = static_cast<float>(b1) * m.array() +
                            static_cast<float>(1.0 - b1) * g.array();
                v.array() = static_cast<float>(b2) * v.array() +
                            static_cast<float>(1.0 - b2) * g.array() * g.array();
                auto update = (m.array() / static_cast<float>(c1)) /
                              ((v.array() / static_cast<float>(c2)).sqrt() +
                               static_cast<float>(eps));
                if (decay) {
                    p.array() -= static_cast<float>(model.effective_lr) *
                                 (update + static_cast<float>(options.weight_decay) * p.array());
                } else {
                    p.array() -= static_cast<float>(model.effective_lr) * update;
                }
            };
            std::vector<Mat<float>*> ps, mms, vvs;
            std::vector<const Mat<float>*> ggs;
            model.encoder.for_each_param([&](const std::string&, Mat<float>& t) { ps.push_back(&t); });
            m_enc.for_each_param([&](const std::string&, Mat<float>& t) { mms.push_back(&t); });
            v_enc.for_each_param([&](const std::string&, Mat<float>& t) { vvs.push_back(&t); });
            grads.for_each_param_const(
                [&](const std::string&, const Mat<float>& t) { ggs.push_back(&t); });
            for (size_t i = 0; i < ps.size(); ++i) {
                adamw(*ps[i], *mms[i], *vvs[i], *ggs[i], ps[i]->rows() > 1);
            }
            adamw(model.head_w, m_hw, v_hw, hg.dw, true);
            adamw(model.head_b, m_hb, v_hb, hg.db, false);
        }
    }
    return model;
}

namespace {

std::map<std::string, int64_t> model_label_ids(const TaskModel& model) {
    std::map<std::string, int64_t> ids;
    for (size_t i = 0; i < model.label_names.size(); ++i) {
        ids[model.label_names[i]] = static_cast<int64_t>(i);
    }
    return ids;
}

struct TestPredictions {
    // sequence tasks: one (gold, pred) per example
    // token tasks: one (gold, pred) per labeled word
    std::vector<std::pair<int64_t, int64_t>> pairs;
    std::vector<std::pair<size_t, int64_t>> example_pred;  // example idx -> seq pred
};

TestPredictions run_test(const TaskModel& model, const std::vector<TaskExample>& test,
                         const SubwordTokenizer& tokenizer) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test split");
    std::map<std::string, int64_t> label_ids = model_label_ids(model);
    const int max_len = std::min(128, model.encoder.config.max_positions);

    TestPredictions out;
    const size_t batch_size = 16;
    for (size_t start = 0; start < test.size(); start += batch_size) {
        size_t end = std::min(test.size(), start + batch_size);
        std::vector<EncodedExample> batch;
        for (size_t i = start; i < end; ++i) {
            batch.push_back(
                encode_example(test[i], model.kind, tokenizer, label_ids, max_len, true));
        }
        IdMatrix ids = batch_ids(batch, max_len);
        Mat<float> hidden = forward_hidden(model.encoder, ids, nullptr);
        std::vector<std::vector<int64_t>> token_preds;
        std::vector<int64_t> seq_preds = head_predictions(
            hidden, ids, batch, model.kind, model.head_w, model.head_b,
            model.kind == TaskKind::token_labeling ? &token_preds : nullptr);

        for (size_t b = 0; b < batch.size(); ++b) {
            if (model.kind == TaskKind::token_labeling) {
                const auto& enc = batch[b];
                for (size_t t = 0; t < enc.position_labels.size(); ++t) {
                    int64_t gold = enc.position_labels[t];
                    if (gold < 0) continue;
                    out.pairs.emplace_back(gold, token_preds[b][t]);
                }
            } else {
                out.pairs.emplace_back(batch[b].sequence_label, seq_preds[b]);
                out.example_pred.emplace_back(start + b, seq_preds[b]);
            }
        }
    }
    return out;
}

}  // namespace

double evaluate(const TaskModel& model, const std::vector<TaskExample>& test,
                const SubwordTokenizer& tokenizer, Metric metric) {
    TestPredictions preds = run_test(model, test, tokenizer);
    if (preds.pairs.empty()) throw std::invalid_argument("evaluate: no labeled items in test");

    if (metric == Metric::accuracy) {
        size_t correct = 0;
        for (auto [gold, pred] : preds.pairs) correct += gold == pred;
        return 100.0 * static_cast<double>(correct) / static_cast<double>(preds.pairs.size());
    }

    // Micro-F1 over non-null labels.
    int64_t null_id = -1;
    std::map<std::string, int64_t> label_ids = model_label_ids(model);
    // Tasks without an explicit null label simply have no id for it.
    auto it = label_ids.find(model.null_label);
    if (it != label_ids.end()) null_id = it->second;
    size_t tp = 0, fp = 0, fn = 0;
    for (auto [gold, pred] : preds.pairs) {
        if (pred != null_id && gold == pred) ++tp;
        if (pred != null_id && gold != pred) ++fp;
        if (gold != null_id && gold != pred) ++fn;
    }
    double denom = static_cast<double>(2 * tp + fp + fn);
    return denom == 0.0 ? 100.0 : 100.0 * 2.0 * static_cast<double>(tp) / denom;
}

std::vector<ItemPrediction> predict_items(const TaskModel& model, const std::string& model_name,
                                          const std::vector<TaskExample>& test,
                                          const SubwordTokenizer& tokenizer) {
    if (model.kind == TaskKind::token_labeling) {
        throw std::invalid_argument("predict_items: per-item predictions are sequence-level");
    }
    TestPredictions preds = run_test(model, test, tokenizer);
    std::vector<ItemPrediction> out;
    out.reserve(preds.example_pred.size());
    for (auto [idx, pred] : preds.example_pred) {
        const TaskExample& ex = test[idx];
        ItemPrediction item;
        item.model = model_name;
        item.task = model.task_name;
        item.dialect = ex.dialect.value_or("");
        item.gold = ex.label;
        item.pred = model.label_names[static_cast<size_t>(pred)];
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<EvalRecord> load_eval_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open records file: " + path);
    std::vector<EvalRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        EvalRecord rec;
        rec.model = j.at("model").get<std::string>();
        rec.task = j.at("task").get<std::string>();
        rec.seed = j.at("seed").get<int>();
        rec.score = j.at("score").get<double>();
        rec.block = diversity_block_from_string(j.at("block").get<std::string>());
        out.push_back(std::move(rec));
    }
    return out;
}

void save_eval_records(std::span<const EvalRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write records file: " + path);
    for (const EvalRecord& rec : records) {
        json j{{"model", rec.model},
               {"task", rec.task},
               {"seed", rec.seed},
               {"score", rec.score},
               {"block", to_string(rec.block)}};
        out << j.dump() << '\n';
    }
}

BenchmarkReport aggregate(std::span<const EvalRecord> records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");

    struct Key {
        std::string model, task;
        bool operator<(const Key& o) const {
            return model != o.model ? model < o.model : task < o.task;
        }
    };
    std::vector<std::string> model_order;
    std::map<std::string, std::vector<std::string>> task_order;  // per model
    std::map<Key, std::vector<double>> scores;
    std::map<Key, std::set<int>> seeds;
    std::map<std::string, DiversityBlock> task_block;

    for (const EvalRecord& rec : records) {
        Key key{rec.model, rec.task};
        if (std::find(model_order.begin(), model_order.end(), rec.model) == model_order.end()) {
            model_order.push_back(rec.model);
        }
        auto& tasks = task_order[rec.model];
        if (std::find(tasks.begin(), tasks.end(), rec.task) == tasks.end()) {
            tasks.push_back(rec.task);
        }
        auto [it, inserted] = task_block.try_emplace(rec.task, rec.block);
        if (!inserted && it->second != rec.block) {
            throw std::invalid_argument("aggregate: task \"" + rec.task +
                                        "\" appears in both diversity blocks");
        }
        if (!seeds[key].insert(rec.seed).second) {
            throw std::invalid_argument("aggregate: duplicate record for model=" + rec.model +
                                        " task=" + rec.task + " seed=" +
                                        std::to_string(rec.seed));
        }
        scores[key].push_back(rec.score);
    }

    size_t expected_seeds = seeds.begin()->second.size();
    std::vector<std::string> offenders;
    for (const auto& [key, s] : seeds) {
        if (s.size() != expected_seeds) {
            offenders.push_back(key.model + "/" + key.task + " (" + std::to_string(s.size()) +
                                " seeds)");
        }
    }
    if (!offenders.empty()) {
        std::string msg = "aggregate: ragged seed counts:";
        for (const std::string& o : offenders) msg += " " + o;
        throw std::invalid_argument(msg);
    }

    BenchmarkReport report;
    for (const std::string& model : model_order) {
        ModelReport mr;
        mr.model = model;
        double sum_std = 0.0, sum_div = 0.0, sum_all = 0.0;
        size_t n_std = 0, n_div = 0;
        for (const std::string& task : task_order[model]) {
            const auto& vals = scores[{model, task}];
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            var /= static_cast<double>(vals.size());
            TaskAggregate agg{task, task_block[task], mean, std::sqrt(var)};
            if (agg.block == DiversityBlock::standard) {
                sum_std += mean;
                ++n_std;
            } else {
                sum_div += mean;
                ++n_div;
            }
            sum_all += mean;
            mr.tasks.push_back(std::move(agg));
        }
        mr.avg_standard = n_std ? sum_std / static_cast<double>(n_std) : 0.0;
        mr.avg_diverse = n_div ? sum_div / static_cast<double>(n_div) : 0.0;
        mr.avg_overall = sum_all / static_cast<double>(n_std + n_div);
        report.models.push_back(std::move(mr));
    }
    return report;
}

std::vector<DialectRow> dialect_breakdown(std::span<const ItemPrediction> predictions) {
    static const std::vector<std::string> kDialects = {"central", "western", "navarrese"};
    std::vector<std::string> model_order;
    std::map<std::string, std::map<std::string, std::pair<size_t, size_t>>> counts;
    for (const ItemPrediction& p : predictions) {
        if (p.dialect.empty()) continue;
        if (std::find(kDialects.begin(), kDialects.end(), p.dialect) == kDialects.end()) {
            throw std::invalid_argument("dialect_breakdown: unknown dialect tag \"" + p.dialect +
                                        "\"");
        }
        if (!counts.count(p.model)) model_order.push_back(p.model);
        auto& cell = counts[p.model][p.dialect];
        cell.second += 1;
        if (p.gold == p.pred) cell.first += 1;
    }
    if (model_order.empty()) {
        throw std::invalid_argument("dialect_breakdown: no dialect-tagged predictions");
    }

    std::vector<DialectRow> rows;
    for (const std::string& model : model_order) {
        DialectRow row;
        row.model = model;
        for (const std::string& dialect : kDialects) {
            auto it = counts[model].find(dialect);
            if (it == counts[model].end()) continue;  // single-dialect sets keep one column
            auto [correct, total] = it->second;
            row.accuracy.emplace_back(dialect, 100.0 * static_cast<double>(correct) /
                                                    static_cast<double>(total));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ItemPrediction> load_item_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open predictions file: " + path);
    std::vector<ItemPrediction> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        ItemPrediction p;
        p.model = j.at("model").get<std::string>();
        p.task = j.value("task", "");
        p.dialect = j.value("dialect", "");
        p.gold = j.at("gold").get<std::string>();
        p.pred = j.at("pred").get<std::string>();
        out.push_back(std::move(p));
    }
    return out;
}

void save_item_predictions(std::span<const ItemPrediction> predictions, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write predictions file: " + path);
    for (const ItemPrediction& p : predictions) {
        json j{{"model", p.model}, {"task", p.task}, {"gold", p.gold}, {"pred", p.pred}};
        if (!p.dialect.empty()) j["dialect"] = p.dialect;
        out << j.dump() << '\n';
    }
}

}  // namespace varikit
