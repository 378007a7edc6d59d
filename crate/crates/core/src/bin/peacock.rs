fn main() {
    peacock::cli::main_exit()
}
