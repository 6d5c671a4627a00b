#include "dare/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dare {

using nlohmann::json;

namespace {

struct Field {
    std::string text;
    int column = 1;
};

struct Row {
    int line = 0;
    std::vector<Field> fields;
};

std::string where(const std::string& path, int line, int column) {
    return path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": ";
}

// Comma-separated fields with optional double-quoting ("" escapes a quote).
std::vector<Row> parse_csv(const std::string& path, const std::string& text, std::vector<std::string>& errors) {
    std::vector<Row> rows;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Row row{line_no, {}};
        std::size_t i = 0;
        bool ok = true;
        while (true) {
            Field f{"", static_cast<int>(i) + 1};
            if (i < line.size() && line[i] == '"') {
                ++i;
                bool closed = false;
                while (i < line.size()) {
                    if (line[i] == '"') {
                        if (i + 1 < line.size() && line[i + 1] == '"') {
                            f.text += '"';
                            i += 2;
                            continue;
                        }
                        closed = true;
                        ++i;
                        break;
                    }
                    f.text += line[i++];
                }
                if (!closed) {
                    errors.push_back(where(path, line_no, f.column) + "unterminated quoted field");
                    ok = false;
                    break;
                }
                if (i < line.size() && line[i] != ',') {
                    errors.push_back(where(path, line_no, static_cast<int>(i) + 1) + "unexpected text after quoted field");
                    ok = false;
                    break;
                }
            } else {
                while (i < line.size() && line[i] != ',') f.text += line[i++];
            }
            row.fields.push_back(std::move(f));
            if (i >= line.size()) break;
            ++i;  // the comma
        }
        if (ok) rows.push_back(std::move(row));
    }
    return rows;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Drops the header row after checking its leading column names.
void take_header(std::vector<Row>& rows, const std::string& path, const std::vector<std::string>& names, bool exact,
                 std::vector<std::string>& errors) {
    if (rows.empty() || rows.front().line != 1) {
        std::string expected;
        for (const auto& n : names) expected += (expected.empty() ? "" : ",") + n;
        errors.push_back(where(path, 1, 1) + "missing header row '" + expected + "'");
        return;
    }
    const Row& h = rows.front();
    bool good = h.fields.size() >= names.size() && (!exact || h.fields.size() == names.size());
    for (std::size_t i = 0; good && i < names.size(); ++i) good = h.fields[i].text == names[i];
    if (!good) {
        std::string expected;
        for (const auto& n : names) expected += (expected.empty() ? "" : ",") + n;
        errors.push_back(where(path, 1, 1) + "header must " + (exact ? "be '" : "start with '") + expected + "'");
    }
    rows.erase(rows.begin());
}

std::optional<long> parse_int(const std::string& s) {
    long v = 0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
    return v;
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) throw ValidationError({what + ": '" + s + "' is not a number"});
    return v;
}

struct LabelUse {
    std::string label;
    std::string at;  // location prefix for errors
};

// Maps the labels seen for one question onto option indices.
std::vector<std::string> resolve_labels(const QuestionSpec& spec, const std::vector<LabelUse>& uses,
                                        std::vector<std::string>& errors) {
    const int k = spec.num_options;
    if (!spec.option_texts.empty()) {
        for (const auto& u : uses)
            if (std::find(spec.option_texts.begin(), spec.option_texts.end(), u.label) == spec.option_texts.end())
                errors.push_back(u.at + "option '" + u.label + "' is not an option of question '" + spec.id + "'");
        return spec.option_texts;
    }
    const bool numeric = std::all_of(uses.begin(), uses.end(), [](const LabelUse& u) { return parse_int(u.label).has_value(); });
    std::vector<std::string> labels;
    if (numeric) {
        for (int i = 0; i < k; ++i) labels.push_back(std::to_string(i));
        for (const auto& u : uses) {
            const long v = *parse_int(u.label);
            if (v < 0 || v >= k)
                errors.push_back(u.at + "option " + u.label + " out of range for question '" + spec.id + "' with " +
                                 std::to_string(k) + " options");
        }
        return labels;
    }
    std::set<std::string> distinct;
    for (const auto& u : uses) distinct.insert(u.label);
    if (static_cast<int>(distinct.size()) > k) {
        errors.push_back(uses.front().at + "question '" + spec.id + "' has " + std::to_string(distinct.size()) +
                         " distinct option labels but " + std::to_string(k) + " options");
        return labels;
    }
    labels.assign(distinct.begin(), distinct.end());
    labels.resize(k);
    return labels;
}

int index_of(const std::vector<std::string>& labels, const std::string& label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

json gaussian_json(const Gaussian1D& g) { return {{"mean", g.mean()}, {"variance", g.variance()}}; }

Gaussian1D gaussian_from(const json& j) { return {j.at("mean").get<double>(), j.at("variance").get<double>()}; }

std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::pair<double, double> env_pair(const char* name, const std::string& value) {
    const auto comma = value.find(',');
    if (comma == std::string::npos) throw ValidationError({std::string(name) + ": expected two comma-separated numbers"});
    return {parse_double(value.substr(0, comma), name), parse_double(value.substr(comma + 1), name)};
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::vector<std::vector<std::string>> default_option_labels(const ResponseDataset& data) {
    std::vector<std::vector<std::string>> out;
    for (const auto& q : data.questions) {
        if (!q.option_texts.empty()) {
            out.push_back(q.option_texts);
            continue;
        }
        std::vector<std::string> labels;
        for (int k = 0; k < q.num_options; ++k) labels.push_back(std::to_string(k));
        out.push_back(std::move(labels));
    }
    return out;
}

LoadedDataset load_dataset(const FileManifest& m) {
    std::vector<std::string> errors;
    LoadedDataset out;

    auto qrows = parse_csv(m.questions, read_file(m.questions), errors);
    take_header(qrows, m.questions, {"question_id", "num_options"}, false, errors);
    for (const auto& row : qrows) {
        const auto& f = row.fields;
        if (f.size() < 2) {
            errors.push_back(where(m.questions, row.line, 1) + "expected question_id,num_options");
            continue;
        }
        if (f[0].text.empty()) errors.push_back(where(m.questions, row.line, 1) + "empty question id");
        const auto k = parse_int(f[1].text);
        if (!k || *k < 2) {
            errors.push_back(where(m.questions, row.line, f[1].column) + "num_options must be an integer >= 2, got '" +
                             f[1].text + "'");
            continue;
        }
        if (out.data.find_question(f[0].text)) {
            errors.push_back(where(m.questions, row.line, 1) + "duplicate question id '" + f[0].text + "'");
            continue;
        }
        QuestionSpec spec{f[0].text, static_cast<int>(*k), std::nullopt, {}};
        if (f.size() > 2 && !f[2].text.empty()) spec.display_text = f[2].text;
        for (std::size_t i = 3; i < f.size(); ++i) spec.option_texts.push_back(f[i].text);
        if (!spec.option_texts.empty() && static_cast<long>(spec.option_texts.size()) != *k)
            errors.push_back(where(m.questions, row.line, f[3].column) + std::to_string(spec.option_texts.size()) +
                             " option texts for " + std::to_string(*k) + " options");
        out.data.add_question(std::move(spec));
    }

    const std::size_t nq = out.data.questions.size();
    std::vector<std::vector<LabelUse>> uses(nq);
    struct Pending {
        std::size_t participant, question;
        std::string label;
    };
    std::vector<Pending> pending;
    std::map<std::pair<std::size_t, std::size_t>, int> first_line;

    auto rrows = parse_csv(m.responses, read_file(m.responses), errors);
    take_header(rrows, m.responses, {"participant_id", "question_id", "response"}, true, errors);
    for (const auto& row : rrows) {
        const auto& f = row.fields;
        if (f.size() != 3) {
            errors.push_back(where(m.responses, row.line, 1) + "expected 3 fields, found " + std::to_string(f.size()));
            continue;
        }
        if (f[0].text.empty()) {
            errors.push_back(where(m.responses, row.line, 1) + "empty participant id");
            continue;
        }
        const auto q = out.data.find_question(f[1].text);
        if (!q) {
            errors.push_back(where(m.responses, row.line, f[1].column) + "undeclared question '" + f[1].text + "'");
            continue;
        }
        const std::size_t p = out.data.participant_index(f[0].text);
        const auto [it, fresh] = first_line.emplace(std::pair{p, *q}, row.line);
        if (!fresh) {
            errors.push_back(where(m.responses, row.line, 1) + "duplicate response of '" + f[0].text + "' to '" +
                             f[1].text + "' (first on line " + std::to_string(it->second) + ")");
            continue;
        }
        uses[*q].push_back({f[2].text, where(m.responses, row.line, f[2].column)});
        pending.push_back({p, *q, f[2].text});
    }

    std::vector<std::pair<std::size_t, std::string>> gold_labels;
    if (m.gold) {
        auto grows = parse_csv(*m.gold, read_file(*m.gold), errors);
        take_header(grows, *m.gold, {"question_id", "correct_option"}, true, errors);
        std::map<std::size_t, int> seen;
        for (const auto& row : grows) {
            const auto& f = row.fields;
            if (f.size() != 2) {
                errors.push_back(where(*m.gold, row.line, 1) + "expected 2 fields, found " + std::to_string(f.size()));
                continue;
            }
            const auto q = out.data.find_question(f[0].text);
            if (!q) {
                errors.push_back(where(*m.gold, row.line, 1) + "undeclared question '" + f[0].text + "'");
                continue;
            }
            if (const auto [it, fresh] = seen.emplace(*q, row.line); !fresh) {
                errors.push_back(where(*m.gold, row.line, 1) + "duplicate gold answer for '" + f[0].text +
                                 "' (first on line " + std::to_string(it->second) + ")");
                continue;
            }
            uses[*q].push_back({f[1].text, where(*m.gold, row.line, f[1].column)});
            gold_labels.emplace_back(*q, f[1].text);
        }
    }

    for (std::size_t q = 0; q < nq; ++q) out.option_labels.push_back(resolve_labels(out.data.questions[q], uses[q], errors));
    if (!errors.empty()) throw ValidationError(std::move(errors));

    for (const auto& pr : pending)
        out.data.records.push_back({pr.participant, pr.question, index_of(out.option_labels[pr.question], pr.label)});
    for (const auto& [q, label] : gold_labels) out.gold[q] = index_of(out.option_labels[q], label);

    auto problems = validate(out.data, out.gold);
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return out;
}

void save_dataset(const LoadedDataset& loaded, const FileManifest& m) {
    const auto labels = loaded.option_labels.empty() ? default_option_labels(loaded.data) : loaded.option_labels;
    const auto& d = loaded.data;

    bool extra = false;
    for (const auto& q : d.questions) extra = extra || q.display_text || !q.option_texts.empty();
    std::string qs = extra ? "question_id,num_options,display_text,option_texts\n" : "question_id,num_options\n";
    for (const auto& q : d.questions) {
        qs += quote(q.id) + "," + std::to_string(q.num_options);
        if (q.display_text || !q.option_texts.empty()) qs += "," + quote(q.display_text.value_or(""));
        for (const auto& t : q.option_texts) qs += "," + quote(t);
        qs += "\n";
    }
    write_file(m.questions, qs);

    std::string rs = "participant_id,question_id,response\n";
    for (const auto& r : d.records)
        rs += quote(d.participants[r.participant]) + "," + quote(d.questions[r.question].id) + "," +
              quote(labels[r.question][r.response]) + "\n";
    write_file(m.responses, rs);

    if (m.gold) {
        std::string gs = "question_id,correct_option\n";
        for (const auto& [q, g] : loaded.gold) gs += quote(d.questions[q].id) + "," + quote(labels[q][g]) + "\n";
        write_file(*m.gold, gs);
    }
}

LoadedDataset load_trec(const std::string& judgments, const std::string& qrels) {
    std::vector<std::string> errors;
    std::map<std::string, int> truth;
    {
        std::istringstream in(read_file(qrels));
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            ++n;
            const auto t = split_tokens(line);
            if (t.empty() || t[0][0] == '#') continue;
            if (t.size() != 3 && t.size() != 4) {
                errors.push_back(where(qrels, n, 1) + "expected 'topic [iteration] doc label'");
                continue;
            }
            const auto label = parse_int(t.back());
            if (!label) {
                errors.push_back(where(qrels, n, 1) + "label '" + t.back() + "' is not an integer");
                continue;
            }
            truth.emplace(t[0] + "/" + t[t.size() - 2], *label >= 1 ? 1 : 0);
        }
    }

    LoadedDataset out;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::istringstream in(read_file(judgments));
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto t = split_tokens(line);
        if (t.empty() || t[0][0] == '#') continue;
        if (t.size() != 4) {
            errors.push_back(where(judgments, n, 1) + "expected 'topic worker doc label'");
            continue;
        }
        const auto label = parse_int(t[3]);
        if (!label) {
            errors.push_back(where(judgments, n, 1) + "label '" + t[3] + "' is not an integer");
            continue;
        }
        const std::string qid = t[0] + "/" + t[2];
        const auto g = truth.find(qid);
        if (g == truth.end()) continue;
        auto q = out.data.find_question(qid);
        if (!q) {
            q = out.data.add_question({qid, 2, std::nullopt, {"irrelevant", "relevant"}});
            out.gold[*q] = g->second;
        }
        const std::size_t p = out.data.participant_index(t[1]);
        if (!seen.insert({p, *q}).second) continue;
        out.data.records.push_back({p, *q, *label >= 1 ? 1 : 0});
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
    out.option_labels = default_option_labels(out.data);
    return out;
}

LoadedDataset trec_subset(const LoadedDataset& loaded, int num_questions, int min_answers) {
    const auto& d = loaded.data;
    std::vector<int> count(d.questions.size(), 0);
    for (const auto& r : d.records) ++count[r.question];
    std::vector<std::size_t> order(d.questions.size());
    for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return count[a] != count[b] ? count[a] > count[b] : d.questions[a].id < d.questions[b].id;
    });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(num_questions, 0))));
    std::sort(order.begin(), order.end());

    std::vector<long> qmap(d.questions.size(), -1);
    for (std::size_t i = 0; i < order.size(); ++i) qmap[order[i]] = static_cast<long>(i);
    std::vector<int> answers(d.participants.size(), 0);
    for (const auto& r : d.records)
        if (qmap[r.question] >= 0) ++answers[r.participant];

    LoadedDataset out;
    for (auto q : order) {
        out.data.add_question(d.questions[q]);
        out.option_labels.push_back(loaded.option_labels.empty() ? default_option_labels(d)[q] : loaded.option_labels[q]);
        if (const auto g = loaded.gold.find(q); g != loaded.gold.end()) out.gold[qmap[q]] = g->second;
    }
    std::vector<long> pmap(d.participants.size(), -1);
    for (std::size_t p = 0; p < d.participants.size(); ++p)
        if (answers[p] >= min_answers) {
            pmap[p] = static_cast<long>(out.data.participants.size());
            out.data.participants.push_back(d.participants[p]);
        }
    for (const auto& r : d.records)
        if (qmap[r.question] >= 0 && pmap[r.participant] >= 0)
            out.data.records.push_back(
                {static_cast<std::size_t>(pmap[r.participant]), static_cast<std::size_t>(qmap[r.question]), r.response});
    return out;
}

PosteriorsDocument make_document(const LoadedDataset& loaded, Posteriors posteriors, bool include_cells) {
    PosteriorsDocument doc;
    for (const auto& q : loaded.data.questions) doc.question_ids.push_back(q.id);
    doc.option_labels = loaded.option_labels.empty() ? default_option_labels(loaded.data) : loaded.option_labels;
    doc.participant_ids = loaded.data.participants;
    doc.posteriors = std::move(posteriors);
    doc.include_cells = include_cells;
    return doc;
}

std::string posteriors_to_json(const PosteriorsDocument& doc) {
    const auto& post = doc.posteriors;
    json questions = json::array();
    std::vector<std::string> bad;
    for (std::size_t q = 0; q < doc.question_ids.size(); ++q) {
        const auto& a = post.answer.at(q);
        if (std::abs(a.probs().sum() - 1.0) > 1e-9) bad.push_back("answer distribution of '" + doc.question_ids[q] + "' does not sum to 1");
        json probs = json::array();
        for (int k = 0; k < a.size(); ++k) probs.push_back(a[k]);
        questions.push_back({{"id", doc.question_ids[q]},
                             {"options", doc.option_labels.at(q)},
                             {"answer", probs},
                             {"difficulty", gaussian_json(post.difficulty.at(q))},
                             {"precision", {{"shape", post.precision.at(q).shape()}, {"scale", post.precision.at(q).scale()}}}});
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
    json participants = json::array();
    for (std::size_t p = 0; p < doc.participant_ids.size(); ++p)
        participants.push_back({{"id", doc.participant_ids[p]}, {"ability", gaussian_json(post.ability.at(p))}});
    json root = {{"format", "dare-posteriors-1"}, {"questions", questions}, {"participants", participants}};
    if (doc.include_cells) {
        json cells = json::array();
        for (const auto& c : post.cells)
            cells.push_back({{"participant", doc.participant_ids.at(c.participant)},
                             {"question", doc.question_ids.at(c.question)},
                             {"p_correct", c.p_correct}});
        root["cells"] = cells;
    }
    return root.dump(2) + "\n";
}

PosteriorsDocument posteriors_from_json(const std::string& text) {
    PosteriorsDocument doc;
    try {
        const json root = json::parse(text);
        if (root.at("format") != "dare-posteriors-1") throw ValidationError({"posteriors: unknown format"});
        std::map<std::string, std::size_t> qidx, pidx;
        for (const auto& q : root.at("questions")) {
            qidx[q.at("id")] = doc.question_ids.size();
            doc.question_ids.push_back(q.at("id"));
            doc.option_labels.push_back(q.at("options").get<std::vector<std::string>>());
            const auto probs = q.at("answer").get<std::vector<double>>();
            doc.posteriors.answer.emplace_back(Eigen::Map<const Eigen::VectorXd>(probs.data(), probs.size()));
            doc.posteriors.difficulty.push_back(gaussian_from(q.at("difficulty")));
            doc.posteriors.precision.emplace_back(q.at("precision").at("shape").get<double>(),
                                                  q.at("precision").at("scale").get<double>());
        }
        for (const auto& p : root.at("participants")) {
            pidx[p.at("id")] = doc.participant_ids.size();
            doc.participant_ids.push_back(p.at("id"));
            doc.posteriors.ability.push_back(gaussian_from(p.at("ability")));
        }
        if (root.contains("cells")) {
            doc.include_cells = true;
            for (const auto& c : root.at("cells")) {
                CellPosterior cell;
                cell.participant = pidx.at(c.at("participant"));
                cell.question = qidx.at(c.at("question"));
                cell.p_correct = c.at("p_correct");
                doc.posteriors.cells.push_back(std::move(cell));
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError({std::string("posteriors: ") + e.what()});
    } catch (const std::out_of_range& e) {
        throw ValidationError({"posteriors: cell refers to an unknown id"});
    } catch (const std::invalid_argument& e) {
        throw ValidationError({std::string("posteriors: ") + e.what()});
    }
    return doc;
}

void save_posteriors(const PosteriorsDocument& doc, const std::string& path) { write_file(path, posteriors_to_json(doc)); }

PosteriorsDocument load_posteriors(const std::string& path) { return posteriors_from_json(read_file(path)); }

json to_json(const PriorSpec& p) {
    return {{"ability", gaussian_json(p.ability)},
            {"difficulty", gaussian_json(p.difficulty)},
            {"precision", {{"shape", p.precision.shape()}, {"scale", p.precision.scale()}}},
            {"discrimination", p.discrimination == DiscriminationMode::Fixed ? "fixed" : "learned"},
            {"fixed_precision", p.fixed_precision}};
}

json to_json(const EpConfig& c) {
    return {{"max_sweeps", c.max_sweeps},
            {"convergence_eps", c.convergence_eps},
            {"damping", c.damping},
            {"tau_quadrature_nodes", c.tau_quadrature_nodes}};
}

PriorSpec priors_from_json(const json& j, PriorSpec p) {
    try {
        if (j.contains("ability")) p.ability = gaussian_from(j.at("ability"));
        if (j.contains("difficulty")) p.difficulty = gaussian_from(j.at("difficulty"));
        if (j.contains("precision"))
            p.precision = GammaDist(j.at("precision").at("shape").get<double>(), j.at("precision").at("scale").get<double>());
        if (j.contains("fixed_precision")) p.fixed_precision = j.at("fixed_precision");
        if (j.contains("discrimination")) {
            const std::string d = j.at("discrimination");
            if (d == "learned")
                p.discrimination = DiscriminationMode::Learned;
            else if (d == "fixed")
                p.discrimination = DiscriminationMode::Fixed;
            else
                throw ValidationError({"priors: discrimination must be 'learned' or 'fixed'"});
        }
    } catch (const json::exception& e) {
        throw ValidationError({std::string("priors: ") + e.what()});
    } catch (const std::invalid_argument& e) {
        throw ValidationError({std::string("priors: ") + e.what()});
    }
    p.check();
    return p;
}

EpConfig ep_from_json(const json& j, EpConfig c) {
    try {
        if (j.contains("max_sweeps")) c.max_sweeps = j.at("max_sweeps");
        if (j.contains("convergence_eps")) c.convergence_eps = j.at("convergence_eps");
        if (j.contains("damping")) c.damping = j.at("damping");
        if (j.contains("tau_quadrature_nodes")) c.tau_quadrature_nodes = j.at("tau_quadrature_nodes");
    } catch (const json::exception& e) {
        throw ValidationError({std::string("ep: ") + e.what()});
    }
    c.check();
    return c;
}

void apply_discrimination(PriorSpec& priors, const std::string& text) {
    if (text == "learned") {
        priors.discrimination = DiscriminationMode::Learned;
        return;
    }
    if (text.rfind("fixed:", 0) == 0) {
        priors.discrimination = DiscriminationMode::Fixed;
        priors.fixed_precision = parse_double(text.substr(6), "discrimination");
        if (!(priors.fixed_precision > 0.0)) throw ValidationError({"discrimination: fixed precision must be positive"});
        return;
    }
    throw ValidationError({"discrimination: expected 'learned' or 'fixed:<v>', got '" + text + "'"});
}

PriorSpec priors_from_env(PriorSpec p) {
    try {
        if (const char* v = std::getenv("DARE_PRIOR_ABILITY")) {
            const auto [m, s2] = env_pair("DARE_PRIOR_ABILITY", v);
            p.ability = Gaussian1D(m, s2);
        }
        if (const char* v = std::getenv("DARE_PRIOR_DIFFICULTY")) {
            const auto [m, s2] = env_pair("DARE_PRIOR_DIFFICULTY", v);
            p.difficulty = Gaussian1D(m, s2);
        }
        if (const char* v = std::getenv("DARE_PRIOR_PRECISION")) {
            const auto [k, th] = env_pair("DARE_PRIOR_PRECISION", v);
            p.precision = GammaDist(k, th);
        }
    } catch (const std::invalid_argument& e) {
        throw ValidationError({std::string("environment priors: ") + e.what()});
    }
    if (const char* v = std::getenv("DARE_DISCRIMINATION")) apply_discrimination(p, v);
    p.check();
    return p;
}

std::string summary_csv(const MetricReport& report) {
    std::string out = "series,x,mean,sd,sem,n\n";
    for (const auto& r : report.summary)
        out += r.series + "," + std::to_string(r.x) + "," + (r.mean ? format_double(*r.mean) : "undefined") + "," +
               format_double(r.sd) + "," + format_double(r.sem) + "," + std::to_string(r.n) + "\n";
    return out;
}

std::string records_csv(const MetricReport& report) {
    std::string out = "series,x,index,value\n";
    for (const auto& r : report.records)
        out += r.series + "," + std::to_string(r.x) + "," + std::to_string(r.index) + "," + format_double(r.value) + "\n";
    return out;
}

}  // namespace dare
