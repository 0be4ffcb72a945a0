import os
import sys
import mod19

print(mod19)
