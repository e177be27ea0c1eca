#include "jointcrm/service.hpp"

#include "jointcrm/errors.hpp"

#include <httplib.h>

#include <fstream>
#include <random>
#include <sstream>

namespace jcrm {

namespace {

Response error(int status, const std::string& message) { return {status, Json{{"error", message}}.dump(), "application/json"}; }

Response ok(const Json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

std::string new_id() {
    static std::mutex m;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(m);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
    return buf;
}

bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-'; });
}

}  // namespace

ConductService::ConductService(std::filesystem::path stateDirectory, OptimizerSpec fitSpec)
    : dir_(std::move(stateDirectory)), fitSpec_(std::move(fitSpec)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".jsonl") continue;
        const std::string id = entry.path().stem().string();
        if (!valid_id(id)) continue;
        std::ifstream in(entry.path());
        auto r = replay(parse_transcript(in));
        if (!r.mismatches.empty()) throw SchemaError("session " + id + " does not replay: " + r.mismatches.front());
        auto s = std::make_shared<Session>();
        s->id = id;
        s->engine = std::make_unique<TrialEngine>(std::move(r.engine));
        sessions_[id] = s;
    }
}

std::size_t ConductService::size() const {
    std::lock_guard lock(registry_);
    return sessions_.size();
}

std::shared_ptr<ConductService::Session> ConductService::find(const std::string& id) const {
    std::lock_guard lock(registry_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void ConductService::persist(const Session& s) const {
    const auto file = dir_ / (s.id + ".jsonl");
    const auto tmp = dir_ / (s.id + ".jsonl.tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << write_transcript(*s.engine);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

Json ConductService::session_view(const Session& s) const {
    const TrialEngine& e = *s.engine;
    const TrialState& st = e.state();
    const DesignSpec& d = e.design();
    Json history = Json::array();
    for (const auto& r : st.history) history.push_back(to_json(r));
    Json fitView = nullptr;
    if (st.finalFit) {
        fitView = to_json(summarize(*st.finalFit, d.phiT));
    } else if (st.lastFit) {
        fitView = to_json(summarize(*st.lastFit, d.phiT));
    }
    const double posterior = st.history.empty() ? 0.0 : st.history.back().stopPosterior;
    return {{"id", s.id},
            {"design", to_json(d)},
            {"labels", e.labels().values()},
            {"stage", to_string(st.stage)},
            {"finished", st.finished()},
            {"cohorts", st.history.size()},
            {"initial_cohorts", st.initialCohorts},
            {"highest_tried", st.history.empty() ? Json(nullptr) : Json(st.highestTried + 1)},
            {"next_dose", st.finished() ? Json(nullptr) : Json(e.next_dose() + 1)},
            {"recommendation", st.recommendation ? Json(*st.recommendation + 1) : Json(nullptr)},
            {"phi_t", d.phiT},
            {"fit", fitView},
            {"stopping", {{"posterior", posterior}, {"threshold", d.stopThreshold}}},
            {"history", history}};
}

Response ConductService::create(const std::string& body) {
    DesignSpec design;
    try {
        design = design_from_json(Json::parse(body));
    } catch (const Json::exception& e) {
        return error(422, std::string("malformed design: ") + e.what());
    } catch (const SchemaError& e) {
        return error(422, e.what());
    }
    auto s = std::make_shared<Session>();
    s->engine = std::make_unique<TrialEngine>(design, fitSpec_);
    {
        std::lock_guard lock(registry_);
        do {
            s->id = new_id();
        } while (sessions_.count(s->id));
        sessions_[s->id] = s;
    }
    std::lock_guard lock(s->m);
    persist(*s);
    return ok(session_view(*s), 201);
}

Response ConductService::submit(const std::string& id, const std::string& body) {
    auto s = find(id);
    if (!s) return error(404, "unknown session '" + id + "'");
    std::unique_lock lock(s->m, std::try_to_lock);
    if (!lock.owns_lock()) return error(409, "another cohort is being recorded for this session");
    Cohort c;
    try {
        c = cohort_from_json(Json::parse(body));
    } catch (const Json::exception& e) {
        return error(422, std::string("malformed cohort: ") + e.what());
    } catch (const SchemaError& e) {
        return error(422, e.what());
    }
    TrialEngine& e = *s->engine;
    if (e.finished()) return error(409, "the trial has ended (" + to_string(e.state().stage) + ")");
    if (c.dose != e.next_dose()) {
        return error(409, "expected a cohort at d" + std::to_string(e.next_dose() + 1) + ", got d" +
                              std::to_string(c.dose + 1));
    }
    try {
        e.submit(std::move(c));
    } catch (const DomainError& ex) {
        return error(422, ex.what());
    }
    persist(*s);
    return ok(session_view(*s));
}

Response ConductService::view(const std::string& id) const {
    auto s = find(id);
    if (!s) return error(404, "unknown session '" + id + "'");
    std::lock_guard lock(s->m);
    return ok(session_view(*s));
}

Response ConductService::transcript(const std::string& id) const {
    auto s = find(id);
    if (!s) return error(404, "unknown session '" + id + "'");
    std::lock_guard lock(s->m);
    return {200, write_transcript(*s->engine), "application/x-ndjson"};
}

Response ConductService::list() const {
    std::lock_guard lock(registry_);
    Json ids = Json::array();
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ok({{"sessions", ids}});
}

struct HttpServer::Impl {
    explicit Impl(ConductService& s) : service(s) {}
    ConductService& service;
    httplib::Server server;
};

HttpServer::HttpServer(ConductService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, r.contentType);
    };
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, impl_->service.create(req.body));
    });
    srv.Get("/sessions", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, impl_->service.list());
    });
    srv.Post(R"(/sessions/([A-Za-z0-9-]+)/cohorts)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, impl_->service.submit(req.matches[1], req.body));
    });
    srv.Get(R"(/sessions/([A-Za-z0-9-]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, impl_->service.view(req.matches[1]));
    });
    srv.Get(R"(/sessions/([A-Za-z0-9-]+)/transcript)",
            [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, impl_->service.transcript(req.matches[1]));
            });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content(Json{{"error", "not found"}}.dump(), "application/json");
    });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(Json{{"error", what}}.dump(), "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace jcrm
