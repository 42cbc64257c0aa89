#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varikit/encoder.hpp"
#include "varikit/tokenizer.hpp"

namespace varikit {

enum class TaskKind { sequence_classification, token_labeling, pair_classification };
enum class Metric { accuracy, micro_f1 };
enum class DiversityBlock { standard, diverse };

std::string to_string(TaskKind k);
std::string to_string(Metric m);
std::string to_string(DiversityBlock b);
TaskKind task_kind_from_string(const std::string& s);
Metric metric_from_string(const std::string& s);
DiversityBlock diversity_block_from_string(const std::string& s);

struct TaskSpec {
    std::string name;
    TaskKind kind = TaskKind::sequence_classification;
    Metric metric = Metric::accuracy;
    DiversityBlock diversity_block = DiversityBlock::standard;
    std::string train_path;
    std::string dev_path;
    std::string test_path;
    std::string null_label = "O";  // excluded from micro-F1

    static TaskSpec from_toml_file(const std::string& path);
};

struct TaskExample {
    std::string text;
    std::optional<std::string> text_pair;
    std::vector<std::string> tokens;
    std::string label;
    std::vector<std::string> labels;
    std::optional<std::string> dialect;
};

std::vector<TaskExample> load_task_examples(const std::string& path, TaskKind kind);
void save_task_examples(const std::vector<TaskExample>& examples, TaskKind kind,
                        const std::string& path);

// Encoder plus a linear head (per-sequence or per-token).
struct TaskModel {
    std::string task_name;
    TaskKind kind = TaskKind::sequence_classification;
    EncoderWeights<float> encoder;
    Mat<float> head_w;  // d x C
    Mat<float> head_b;  // 1 x C
    std::vector<std::string> label_names;
    std::string null_label = "O";
    double effective_lr = 0.0;  // after the large-model halving rule
};

struct FinetuneOptions {
    double lr = 3e-4;
    int epochs = 3;
    int batch_size = 8;
    int max_len = 128;
    double weight_decay = 0.01;
};

TaskModel finetune(const EncoderWeights<float>& checkpoint, const TaskSpec& spec,
                   const std::vector<TaskExample>& train, const SubwordTokenizer& tokenizer,
                   uint64_t seed, const FinetuneOptions& options);

double evaluate(const TaskModel& model, const std::vector<TaskExample>& test,
                const SubwordTokenizer& tokenizer, Metric metric);

// Per-item predictions, for the dialect breakdown.
struct ItemPrediction {
    std::string model;
    std::string task;
    std::string dialect;  // empty when untagged
    std::string gold;
    std::string pred;
};

std::vector<ItemPrediction> predict_items(const TaskModel& model, const std::string& model_name,
                                          const std::vector<TaskExample>& test,
                                          const SubwordTokenizer& tokenizer);

struct EvalRecord {
    std::string model;
    std::string task;
    int seed = 0;
    double score = 0.0;  // in [0, 100]
    DiversityBlock block = DiversityBlock::standard;
};

std::vector<EvalRecord> load_eval_records(const std::string& path);
void save_eval_records(std::span<const EvalRecord> records, const std::string& path);

struct TaskAggregate {
    std::string task;
    DiversityBlock block = DiversityBlock::standard;
    double mean = 0.0;
    double stddev = 0.0;  // population, over seeds
};

struct ModelReport {
    std::string model;
    std::vector<TaskAggregate> tasks;
    double avg_standard = 0.0;
    double avg_diverse = 0.0;
    double avg_overall = 0.0;  // unweighted over all tasks, not block averages
};

struct BenchmarkReport {
    std::vector<ModelReport> models;
};

BenchmarkReport aggregate(std::span<const EvalRecord> records);

struct DialectRow {
    std::string model;
    std::vector<std::pair<std::string, double>> accuracy;  // dialect -> percent
};

// Accuracy per (model, dialect) over {central, western, navarrese};
// an unknown dialect tag is an error.
std::vector<DialectRow> dialect_breakdown(std::span<const ItemPrediction> predictions);

std::vector<ItemPrediction> load_item_predictions(const std::string& path);
void save_item_predictions(std::span<const ItemPrediction> predictions, const std::string& path);

}  // namespace varikit
