import os
import sys
import mod13

print(mod13)
