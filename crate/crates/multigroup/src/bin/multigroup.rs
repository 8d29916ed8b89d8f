fn main() { std::process::exit(multigroup::cli::main()); }
