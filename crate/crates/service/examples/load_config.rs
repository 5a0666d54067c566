//! Shows how a config file and INTERVIEW_* variables combine.

use interview_service::ServiceConfig;

fn main() {
    let mut config = ServiceConfig::parse(
        r#"
        listen = "0.0.0.0:8080"
        [store]
        path = "/var/lib/interview/sessions.json"
        [engine]
        threshold = 4
        "#,
    )
    .expect("valid config");
    config
        .apply_env([
            ("INTERVIEW_BACKEND".to_string(), "live".to_string()),
            ("INTERVIEW_MODEL".to_string(), "local-model".to_string()),
        ])
        .expect("valid overrides");
    println!("{}", toml::to_string_pretty(&config).expect("config serializes"));
}
