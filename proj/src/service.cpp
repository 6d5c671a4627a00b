#include "dare/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

#include <unistd.h>

namespace dare {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::regex kIdPattern("[A-Za-z0-9_-][A-Za-z0-9_.-]{0,63}");

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

// Appends one line and forces it to stable storage.
void append_line(const fs::path& path, const std::string& line) {
    FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) throw IoError("cannot open event log '" + path.string() + "'");
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                    ::fsync(::fileno(f)) == 0;
    std::fclose(f);
    if (!ok) throw IoError("failed writing event log '" + path.string() + "'");
}

json gaussian_json(const Gaussian1D& g) { return {{"mean", g.mean()}, {"variance", g.variance()}}; }

json settings_json(const SessionSettings& s) {
    return {{"priors", to_json(s.priors)}, {"ep", to_json(s.ep)}, {"budget", s.budget}};
}

SessionSettings settings_from(const json& j, SessionSettings base) {
    if (j.contains("priors")) base.priors = priors_from_json(j.at("priors"), base.priors);
    if (j.contains("ep")) base.ep = ep_from_json(j.at("ep"), base.ep);
    if (j.contains("budget")) {
        if (!j.at("budget").is_number_integer()) throw ValidationError({"budget must be an integer"});
        base.budget = j.at("budget").get<int>();
        if (base.budget < 0) throw ValidationError({"budget must be nonnegative"});
    }
    return base;
}

std::size_t question_index(const QuestionBank& bank, const std::string& id) {
    for (std::size_t q = 0; q < bank.questions.size(); ++q)
        if (bank.questions[q].id == id) return q;
    throw ValidationError({"unknown question '" + id + "'"});
}

json question_payload(const QuestionSpec& q) {
    json j = {{"id", q.id}, {"num_options", q.num_options}};
    j["display_text"] = q.display_text ? json(*q.display_text) : json(nullptr);
    j["options"] = q.option_texts.empty() ? json(nullptr) : json(q.option_texts);
    return j;
}

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ValidationError({std::string(what) + ": " + e.what()});
    }
}

}  // namespace

BankDefinition bank_from_json(const json& j) {
    return guarded("bank", [&] {
        auto bank = std::make_shared<QuestionBank>();
        std::vector<std::string> problems;
        if (!j.is_object() || !j.contains("questions") || !j.at("questions").is_array())
            throw ValidationError({"bank: expected an object with a 'questions' array"});
        for (const auto& item : j.at("questions")) {
            QuestionSpec spec;
            spec.id = item.at("id").get<std::string>();
            spec.num_options = item.at("num_options").get<int>();
            if (item.contains("display_text") && !item.at("display_text").is_null())
                spec.display_text = item.at("display_text").get<std::string>();
            if (item.contains("options") && !item.at("options").is_null())
                spec.option_texts = item.at("options").get<std::vector<std::string>>();
            const std::size_t q = bank->questions.size();
            if (item.contains("gold") && !item.at("gold").is_null()) {
                const auto& g = item.at("gold");
                if (g.is_number_integer()) {
                    bank->gold[q] = g.get<int>();
                } else {
                    const auto label = g.get<std::string>();
                    const auto it = std::find(spec.option_texts.begin(), spec.option_texts.end(), label);
                    if (it == spec.option_texts.end())
                        problems.push_back("bank: gold '" + label + "' is not an option of '" + spec.id + "'");
                    else
                        bank->gold[q] = static_cast<int>(it - spec.option_texts.begin());
                }
            }
            if (!item.contains("difficulty") || !item.contains("precision"))
                problems.push_back("bank: question '" + spec.id + "' needs 'difficulty' and 'precision'");
            else {
                bank->clamps.difficulty.push_back(item.at("difficulty").get<double>());
                bank->clamps.precision.push_back(item.at("precision").get<double>());
            }
            bank->questions.push_back(std::move(spec));
        }
        ResponseDataset shape;
        for (const auto& q : bank->questions) shape.add_question(q);
        for (auto& v : validate(shape, {})) problems.push_back("bank: " + v);
        if (!problems.empty()) throw ValidationError(std::move(problems));
        bank->check();
        SessionSettings defaults = settings_from(j, SessionSettings{});
        return BankDefinition{std::move(bank), defaults};
    });
}

json bank_to_json(const QuestionBank& bank, const SessionSettings& defaults) {
    json qs = json::array();
    for (std::size_t q = 0; q < bank.questions.size(); ++q) {
        json item = question_payload(bank.questions[q]);
        item["gold"] = bank.gold.at(q);
        item["difficulty"] = bank.clamps.difficulty.at(q);
        item["precision"] = bank.clamps.precision.at(q);
        qs.push_back(std::move(item));
    }
    json j = settings_json(defaults);
    j["questions"] = std::move(qs);
    return j;
}

QuestionBank calibrated_bank(const LoadedDataset& loaded, const PriorSpec& priors, const EpConfig& ep) {
    QuestionBank bank;
    bank.questions = loaded.data.questions;
    bank.gold = loaded.gold;
    std::vector<std::string> missing;
    for (std::size_t q = 0; q < bank.questions.size(); ++q)
        if (!bank.gold.count(q)) missing.push_back("bank: question '" + bank.questions[q].id + "' has no gold answer");
    if (!missing.empty()) throw ValidationError(std::move(missing));
    bank.clamps = calibrate(loaded.data, loaded.gold, priors, ep);
    bank.check();
    return bank;
}

// ---------------------------------------------------------------------------

struct SessionService::Session {
    std::string id;
    fs::path log;
    mutable std::mutex mutex;
    json created;  // payload of the Created event
    SessionState state;
    std::vector<Gaussian1D> trace;
    std::optional<std::size_t> offered;
    double offered_score = 0.0;
    std::uint64_t seq = 0;

    void append(const std::string& kind, json payload) {
        const json event = {{"seq", seq},
                            {"kind", kind},
                            {"session_id", id},
                            {"timestamp", utc_now()},
                            {"payload", std::move(payload)}};
        append_line(log, event.dump() + "\n");
        ++seq;
    }

    void apply_created(const json& payload) {
        created = payload;
        const auto def = bank_from_json(payload.at("bank"));
        const auto settings = settings_from(payload.at("settings"), def.defaults);
        state = start_session(def.bank, payload.at("participant").get<std::string>(), settings);
        trace = {state.ability};
    }

    void apply_submitted(std::size_t q, int r) {
        state = submit_response(state, q, r);
        trace.push_back(state.ability);
        offered.reset();
    }

    json offer_json() const {
        return {{"status", "question"},
                {"question", question_payload(state.bank->questions[*offered])},
                {"expected_entropy_reduction", offered_score},
                {"asked_count", state.asked.size()},
                {"budget", state.settings.budget}};
    }

    json estimate_json() const {
        return {{"ability", gaussian_json(state.ability)},
                {"asked_count", state.asked.size()},
                {"estimated_raw_score", estimate_raw_score(state)},
                {"budget", state.settings.budget},
                {"complete", state.exhausted()}};
    }
};

SessionService::SessionService(fs::path data_dir) : dir_(std::move(data_dir)) {
    fs::create_directories(dir_ / "banks");
    fs::create_directories(dir_ / "sessions");
    recover();
}

SessionService::~SessionService() = default;

void SessionService::recover() {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir_ / "banks"))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) banks_[f.stem().string()] = bank_from_json(json::parse(read_file(f.string())));

    files.clear();
    for (const auto& e : fs::directory_iterator(dir_ / "sessions"))
        if (e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto s = std::make_shared<Session>();
        s->id = f.stem().string();
        s->log = f;
        const std::string text = read_file(f.string());
        std::istringstream in(text);
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(in, line)) lines.push_back(line);
        // Without a final newline the last line is a torn write.
        if (!text.empty() && text.back() != '\n') lines.pop_back();
        for (const auto& l : lines) {
            const json ev = json::parse(l);
            if (ev.at("seq").get<std::uint64_t>() != s->seq)
                throw ValidationError({"event log '" + f.string() + "': sequence gap at " + std::to_string(s->seq)});
            const std::string kind = ev.at("kind");
            const json& p = ev.at("payload");
            if (kind == "Created") {
                s->apply_created(p);
            } else if (kind == "QuestionOffered") {
                s->offered = question_index(*s->state.bank, p.at("question_id"));
                s->offered_score = p.at("expected_entropy_reduction");
            } else if (kind == "ResponseSubmitted") {
                s->apply_submitted(question_index(*s->state.bank, p.at("question_id")), p.at("response"));
            }
            ++s->seq;
        }
        if (s->seq == 0) continue;
        if (s->id.size() > 1 && s->id[0] == 's')
            if (const auto n = std::strtoull(s->id.c_str() + 1, nullptr, 10); n >= next_id_) next_id_ = n + 1;
        sessions_[s->id] = std::move(s);
    }
}

void SessionService::put_bank(const std::string& id, const json& definition) {
    if (!std::regex_match(id, kIdPattern)) throw ValidationError({"bank id '" + id + "' is not allowed"});
    auto def = bank_from_json(definition);
    const std::string text = bank_to_json(*def.bank, def.defaults).dump(2) + "\n";
    std::unique_lock lock(banks_mutex_);
    write_file((dir_ / "banks" / (id + ".json")).string(), text);
    banks_[id] = std::move(def);
}

json SessionService::list_banks() const {
    std::shared_lock lock(banks_mutex_);
    json out = json::array();
    for (const auto& [id, def] : banks_)
        out.push_back({{"id", id}, {"questions", def.bank->questions.size()}, {"budget", def.defaults.budget}});
    return {{"banks", out}};
}

json SessionService::get_bank(const std::string& id) const {
    std::shared_lock lock(banks_mutex_);
    const auto it = banks_.find(id);
    if (it == banks_.end()) throw NotFound("unknown bank '" + id + "'");
    return bank_to_json(*it->second.bank, it->second.defaults);
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
}

json SessionService::create_session(const json& request) {
    return guarded("session", [&] {
        BankDefinition def;
        if (request.contains("bank_id")) {
            const std::string bid = request.at("bank_id");
            std::shared_lock lock(banks_mutex_);
            const auto it = banks_.find(bid);
            if (it == banks_.end()) throw NotFound("unknown bank '" + bid + "'");
            def = it->second;
        } else if (request.contains("bank")) {
            def = bank_from_json(request.at("bank"));
        } else {
            throw ValidationError({"session: request needs 'bank_id' or 'bank'"});
        }
        const SessionSettings settings = settings_from(request, def.defaults);
        const std::string participant = request.value("participant", std::string("anonymous"));
        const json payload = {{"participant", participant},
                              {"bank", bank_to_json(*def.bank, def.defaults)},
                              {"settings", settings_json(settings)}};

        auto s = std::make_shared<Session>();
        s->apply_created(payload);
        {
            std::unique_lock lock(sessions_mutex_);
            char buf[32];
            std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_++));
            s->id = buf;
            s->log = dir_ / "sessions" / (s->id + ".jsonl");
            s->append("Created", payload);
            sessions_[s->id] = s;
        }
        return json{{"session_id", s->id},
                    {"participant", participant},
                    {"bank_size", s->state.bank->questions.size()},
                    {"budget", settings.budget},
                    {"ability", gaussian_json(s->state.ability)},
                    {"asked_count", 0}};
    });
}

json SessionService::next(const std::string& session_id) {
    const auto s = find(session_id);
    std::lock_guard lock(s->mutex);
    if (s->offered) return s->offer_json();
    if (s->state.exhausted()) return {{"status", "complete"}, {"asked_count", s->state.asked.size()}, {"budget", s->state.settings.budget}};
    QuestionScore best;
    try {
        best = select_next(s->state);
    } catch (const SessionExhausted&) {
        return {{"status", "complete"}, {"asked_count", s->state.asked.size()}, {"budget", s->state.settings.budget}};
    }
    s->append("QuestionOffered", {{"question_id", s->state.bank->questions[best.question].id},
                                  {"expected_entropy_reduction", best.expected_entropy_reduction}});
    s->offered = best.question;
    s->offered_score = best.expected_entropy_reduction;
    return s->offer_json();
}

json SessionService::submit(const std::string& session_id, const json& request) {
    const auto s = find(session_id);
    std::lock_guard lock(s->mutex);
    return guarded("submit", [&] {
        const auto& bank = *s->state.bank;
        const std::size_t q = question_index(bank, request.at("question_id").get<std::string>());
        const auto& spec = bank.questions[q];
        int r = -1;
        const auto& rj = request.at("response");
        if (rj.is_number_integer()) {
            r = rj.get<int>();
        } else {
            const auto label = rj.get<std::string>();
            const auto it = std::find(spec.option_texts.begin(), spec.option_texts.end(), label);
            if (it == spec.option_texts.end())
                throw ValidationError({"submit: '" + label + "' is not an option of '" + spec.id + "'"});
            r = static_cast<int>(it - spec.option_texts.begin());
        }
        if (s->state.is_asked(q)) throw Conflict("question '" + spec.id + "' was already answered");
        if (!s->offered || *s->offered != q) throw Conflict("question '" + spec.id + "' is not the current offer");
        if (r < 0 || r >= spec.num_options)
            throw ValidationError({"submit: response " + std::to_string(r) + " out of range for '" + spec.id + "'"});

        const SessionState next = submit_response(s->state, q, r);
        s->append("ResponseSubmitted", {{"question_id", spec.id}, {"response", r}});
        s->state = next;
        s->trace.push_back(next.ability);
        s->offered.reset();
        json reply = s->estimate_json();
        s->append("EstimateComputed", reply);
        return reply;
    });
}

json SessionService::report(const std::string& session_id) const {
    const auto s = find(session_id);
    std::lock_guard lock(s->mutex);
    const auto& bank = *s->state.bank;
    json asked = json::array();
    for (const auto& [q, r] : s->state.asked)
        asked.push_back({{"question_id", bank.questions[q].id}, {"response", r}, {"correct", r == bank.gold.at(q)}});
    json trace = json::array();
    for (const auto& g : s->trace) trace.push_back(gaussian_json(g));
    return {{"session_id", s->id},
            {"participant", s->state.participant},
            {"budget", s->state.settings.budget},
            {"asked_count", s->state.asked.size()},
            {"asked", asked},
            {"trace", trace},
            {"estimated_raw_score", estimate_raw_score(s->state)},
            {"complete", s->state.exhausted()}};
}

SessionState SessionService::state(const std::string& session_id) const {
    const auto s = find(session_id);
    std::lock_guard lock(s->mutex);
    return s->state;
}

// ---------------------------------------------------------------------------

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
void handle(httplib::Response& res, int ok_status, F&& f) {
    try {
        send(res, ok_status, f());
    } catch (const ValidationError& e) {
        send(res, 400, {{"error", e.what()}, {"violations", e.violations()}});
    } catch (const json::exception& e) {
        send(res, 400, {{"error", e.what()}});
    } catch (const NotFound& e) {
        send(res, 404, {{"error", e.what()}});
    } catch (const Conflict& e) {
        send(res, 409, {{"error", e.what()}});
    } catch (const SessionExhausted& e) {
        send(res, 409, {{"error", e.what()}});
    } catch (const std::exception& e) {
        send(res, 500, {{"error", e.what()}});
    }
}

}  // namespace

void mount_routes(httplib::Server& server, SessionService& service) {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send(res, 200, {{"status", "ok"}}); });
    server.Get("/api/v1/banks", [&](const httplib::Request&, httplib::Response& res) {
        handle(res, 200, [&] { return service.list_banks(); });
    });
    server.Get(R"(/api/v1/banks/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
        handle(res, 200, [&] { return service.get_bank(req.matches[1]); });
    });
    server.Put(R"(/api/v1/banks/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
        handle(res, 200, [&] {
            const std::string id = req.matches[1];
            service.put_bank(id, json::parse(req.body));
            return json{{"id", id}};
        });
    });
    server.Post("/api/v1/sessions", [&](const httplib::Request& req, httplib::Response& res) {
        handle(res, 201, [&] { return service.create_session(json::parse(req.body)); });
    });
    server.Get(R"(/api/v1/sessions/([^/]+)/next)", [&](const httplib::Request& req, httplib::Response& res) {
        handle(res, 200, [&] { return service.next(req.matches[1]); });
    });
    server.Post(R"(/api/v1/sessions/([^/]+)/responses)", [&](const httplib::Request& req, httplib::Response& res) {
        handle(res, 200, [&] { return service.submit(req.matches[1], json::parse(req.body)); });
    });
    server.Get(R"(/api/v1/sessions/([^/]+)/report)", [&](const httplib::Request& req, httplib::Response& res) {
        handle(res, 200, [&] { return service.report(req.matches[1]); });
    });
}

}  // namespace dare
