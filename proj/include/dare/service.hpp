#pragma once

#include "dare/adaptive.hpp"
#include "dare/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>

namespace httplib {
class Server;
}

namespace dare {

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A submission that does not match the session's current offer.
class Conflict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bank document:
///   {"questions": [{"id", "num_options", "gold", "difficulty", "precision",
///                   "display_text"?, "options"?}],
///    "priors"?: {...}, "ep"?: {...}, "budget"?: n}
/// "gold" is an option index or one of "options".
struct BankDefinition {
    std::shared_ptr<const QuestionBank> bank;
    SessionSettings defaults;
};

BankDefinition bank_from_json(const nlohmann::json& j);
nlohmann::json bank_to_json(const QuestionBank& bank, const SessionSettings& defaults);

/// Calibrates a bank from a fully gold-labelled dataset.
QuestionBank calibrated_bank(const LoadedDataset& loaded, const PriorSpec& priors, const EpConfig& ep);

/// Adaptive test sessions with one append-only JSONL event log per session
/// under `data_dir/sessions`, and banks stored under `data_dir/banks`.
///
/// Operations on one session are serialised; different sessions proceed in
/// parallel. Every event is flushed to disk before the call returns.
class SessionService {
public:
    /// Loads stored banks and replays every session log found in `data_dir`.
    explicit SessionService(std::filesystem::path data_dir);
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    void put_bank(const std::string& id, const nlohmann::json& definition);
    [[nodiscard]] nlohmann::json list_banks() const;
    [[nodiscard]] nlohmann::json get_bank(const std::string& id) const;

    /// Request: {"bank_id"} or {"bank": {...}}, plus optional "participant",
    /// "budget", "priors" and "ep".
    nlohmann::json create_session(const nlohmann::json& request);
    nlohmann::json next(const std::string& session_id);
    /// Request: {"question_id", "response"}; the response is an option index
    /// or one of the question's option texts.
    nlohmann::json submit(const std::string& session_id, const nlohmann::json& request);
    [[nodiscard]] nlohmann::json report(const std::string& session_id) const;

    /// The session's current state (for tests and tools).
    [[nodiscard]] SessionState state(const std::string& session_id) const;

    [[nodiscard]] const std::filesystem::path& data_dir() const { return dir_; }

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    void recover();

    std::filesystem::path dir_;
    mutable std::shared_mutex banks_mutex_;
    std::map<std::string, BankDefinition> banks_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 0;
};

/// Registers the /api/v1 routes and /healthz on `server`.
void mount_routes(httplib::Server& server, SessionService& service);

}  // namespace dare
