use latcf::cli::{main_with_args, SEED_ENV};

fn main() {
    let env_seed = std::env::var(SEED_ENV).ok();
    let code = main_with_args(
        std::env::args_os(),
        env_seed,
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
