use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("DISTILLFORGE_LOG", "error")).init();
    std::process::exit(distillforge::cli::run(std::env::args_os()));
}
