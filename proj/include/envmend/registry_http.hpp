// envmend/registry_http.hpp - live package-index metadata source
#pragma once

#include <string>

#include "envmend/registry_retriever.hpp"

#include "httplib.h"
#include "json.hpp"

namespace envmend {

/// GET <base>/pypi/<name>/json against the public package index (or a mirror).
class HttpRegistrySource : public RegistrySource {
public:
    explicit HttpRegistrySource(std::string base_url = "https://pypi.org")
        : base_url_(std::move(base_url)) {}

    nlohmann::json fetch_document(const std::string& install_name) override {
        httplib::Client client(base_url_);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(60, 0);
        client.set_follow_location(true);

        auto res = client.Get("/pypi/" + install_name + "/json");
        if (!res)
            throw RegistryUnavailableError("registry unreachable at " + base_url_ + ": " +
                                           httplib::to_string(res.error()));
        if (res->status == 404) throw UnknownPackageError(install_name);
        if (res->status != 200)
            throw RegistryUnavailableError("registry returned status " +
                                           std::to_string(res->status) + " for " + install_name);
        auto doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded())
            throw RegistryUnavailableError("registry sent unparseable metadata for " + install_name);
        return doc;
    }

private:
    std::string base_url_;
};

}  // namespace envmend
